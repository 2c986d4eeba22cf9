"""
Warped Metrics Lab
Periodic solutions of the warping ODE for warped products S^1(T) x N with
harmonic curvature, their census and their Ricci verification.
"""
