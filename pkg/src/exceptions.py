"""
Error types for the warped-metric laboratory.

Every error carries a short machine token (``reason``) and the process exit
code the CLI maps it to: 2 for parameter validation, 3 for numerical
failure, 4 for I/O.
"""

from typing import Optional


class LaboratoryError(Exception):
    """Base class for all laboratory errors."""
    reason: str = "laboratory_error"
    exit_code: int = 3

    def __init__(self, message: str, reason: Optional[str] = None):
        super().__init__(message)
        if reason is not None:
            self.reason = reason


class ParameterError(LaboratoryError, ValueError):
    """Invalid model parameters, dimensions, grids or flags."""
    reason = "invalid_parameter"
    exit_code = 2


class EnergyRangeError(ParameterError):
    """Energy outside the admissible interval (0, cutoff * c_max)."""
    reason = "energy_out_of_range"


class PeriodTargetError(ParameterError):
    """
    Requested minimal period is not attained by the period map.

    reason is one of:
    - "below_minimum": target beyond the small-amplitude limit (only the
      constant solution exists)
    - "above_cutoff": target beyond the period at the near-homoclinic cutoff
    - "isochronous": the period map is constant and the target differs from it
    """
    reason = "period_target_unattainable"

    def __init__(self, message: str, reason: str, target: float, limit: float):
        super().__init__(message, reason=reason)
        self.target = target
        self.limit = limit


class BracketError(LaboratoryError, RuntimeError):
    """Root bracketing failed (should not happen for valid systems)."""
    reason = "bracket_failure"


class AccuracyError(LaboratoryError, RuntimeError):
    """A numerical tolerance could not be reached."""
    reason = "accuracy_not_reached"

    def __init__(self, message: str, achieved: Optional[float] = None, reason: Optional[str] = None):
        super().__init__(message, reason=reason)
        self.achieved = achieved


class ClosureError(AccuracyError):
    """An integrated orbit failed to close after one minimal period."""
    reason = "non_closure"


class PositivityError(AccuracyError):
    """A sampled warping function or Yamabe factor became non-positive."""
    reason = "positivity_violation"


class ProfileIOError(LaboratoryError, OSError):
    """A profile file could not be read or parsed."""
    reason = "io_error"
    exit_code = 4
