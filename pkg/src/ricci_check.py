"""
Ricci tensor checks along a sampled warping function.

For the warped product dt^2 + h^(4/n)(t) g0 with e^q = h^(4/n) and an
Einstein fiber (r0 = R/(n-1) g0), every component of the covariant
derivative of the Ricci tensor is a function of t times g0. The
Codazzi (harmonic curvature) condition reduces to one scalar identity,
and parallelism to the vanishing of all three scalar fields.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence
import logging
import math

import numpy as np

from src.exceptions import ParameterError, PositivityError
from src.potential_core import ModelParams

logger = logging.getLogger(__name__)

PERIODICITY_TOL = 1e-8


@dataclass(frozen=True)
class SolutionProfile:
    """
    Warping function h and its first three derivatives sampled on
    t_grid = [0, T] (both ends included), with the exponent chain
    q = (4/n) log h and its derivatives.
    """
    t_grid: np.ndarray
    h: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    h3: np.ndarray
    q: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    q3: np.ndarray
    params: ModelParams
    c: Optional[float] = None
    closure_distance: float = 0.0

    @property
    def T(self) -> float:
        return float(self.t_grid[-1] - self.t_grid[0])

    @property
    def n(self) -> int:
        return self.params.n

    @classmethod
    def from_h_chain(
        cls,
        t_grid: np.ndarray,
        h: np.ndarray,
        h1: np.ndarray,
        h2: np.ndarray,
        h3: np.ndarray,
        params: ModelParams,
        c: Optional[float] = None,
        closure_distance: float = 0.0,
    ) -> "SolutionProfile":
        """Build a profile from h and its derivatives, deriving the q chain."""
        h = np.asarray(h, dtype=float)
        if np.any(h <= 0) or not np.all(np.isfinite(h)):
            raise PositivityError(f"warping function must be positive and finite (min {np.min(h)})")
        k = 4.0 / params.n
        r1 = h1 / h
        r2 = h2 / h
        r3 = h3 / h
        return cls(
            t_grid=np.asarray(t_grid, dtype=float),
            h=h,
            h1=np.asarray(h1, dtype=float),
            h2=np.asarray(h2, dtype=float),
            h3=np.asarray(h3, dtype=float),
            q=k * np.log(h),
            q1=k * r1,
            q2=k * (r2 - r1 ** 2),
            q3=k * (r3 - 3.0 * r1 * r2 + 2.0 * r1 ** 3),
            params=params,
            c=c,
            closure_distance=closure_distance,
        )

    def to_columns(self) -> Dict[str, np.ndarray]:
        """Columns t, h, h1, h2, h3, q, q1, q2, q3."""
        return {
            "t": self.t_grid, "h": self.h, "h1": self.h1, "h2": self.h2, "h3": self.h3,
            "q": self.q, "q1": self.q1, "q2": self.q2, "q3": self.q3,
        }


@dataclass(frozen=True)
class RicciDerivativeFields:
    """
    Scalar factors of the covariant derivative of the Ricci tensor.

    The mixed components nabla_0 r_i0 and nabla_i r_00 vanish identically.
    """
    rho_000: np.ndarray
    rho_0ij_scalar: np.ndarray
    rho_i0j_scalar: np.ndarray
    codazzi_residual: np.ndarray
    sup_norms: Dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class OdeResidual:
    """Residual of the warping ODE with stored and with finite-difference h''."""
    closed: float
    finite_difference: float
    fourth_order: float


@dataclass(frozen=True)
class ParallelismVerdict:
    verdict: str
    sup_norm: float
    pair_residuals: Dict[str, float] = field(default_factory=dict)

    @property
    def parallel(self) -> bool:
        return self.verdict == "parallel"


@dataclass(frozen=True)
class CodazziFields:
    """Eigenvalue fields of b = lambda dt^2 + mu e^(2 psi) g_N."""
    lam: np.ndarray
    mu: np.ndarray
    trace: np.ndarray
    distinct: bool


# ============================================================================
# Validation and profile construction
# ============================================================================

def validate_profile(p: SolutionProfile, periodic: bool = True) -> None:
    """
    Check positivity, the q chain identity e^q = h^(4/n) and periodicity.

    Raises:
        PositivityError: If h is not positive.
        ParameterError: If the grid is not uniform or the other invariants fail.
    """
    if p.h.size < 4:
        raise ParameterError(f"profile needs at least 4 samples, got {p.h.size}")
    if np.any(p.h <= 0):
        raise PositivityError(f"profile has non-positive warping values (min {np.min(p.h)})")
    steps = np.diff(p.t_grid)
    if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * np.mean(steps):
        raise ParameterError("profile grid must be uniform and increasing")
    power = np.power(p.h, 4.0 / p.n)
    if np.max(np.abs(np.exp(p.q) - power) / np.maximum(power, 1.0)) > 1e-12:
        raise ParameterError("profile violates e^q = h^(4/n)")
    if periodic:
        mismatch = max(abs(p.h[0] - p.h[-1]), abs(p.h1[0] - p.h1[-1]))
        if mismatch > PERIODICITY_TOL * max(1.0, float(np.max(np.abs(p.h)))):
            raise ParameterError(f"profile is not periodic: mismatch {mismatch:.3e} at t = T")


def perturb_profile(p: SolutionProfile, eps: float, mode: int = 1) -> SolutionProfile:
    """
    Multiply h by 1 + eps * sin(2 pi mode t / T), differentiating exactly.
    """
    w = 2.0 * math.pi * mode / p.T
    s = np.sin(w * p.t_grid)
    co = np.cos(w * p.t_grid)
    P = 1.0 + eps * s
    P1 = eps * w * co
    P2 = -eps * w ** 2 * s
    P3 = -eps * w ** 3 * co
    return SolutionProfile.from_h_chain(
        p.t_grid,
        p.h * P,
        p.h1 * P + p.h * P1,
        p.h2 * P + 2.0 * p.h1 * P1 + p.h * P2,
        p.h3 * P + 3.0 * p.h2 * P1 + 3.0 * p.h1 * P2 + p.h * P3,
        p.params,
    )


def spectral_derivatives(values: np.ndarray, period: float, orders: Sequence[int] = (1, 2, 3)) -> Dict[int, np.ndarray]:
    """
    Derivatives of periodic samples (one period, endpoint excluded) by FFT.

    Fourier modes below the round-off floor are discarded before
    differentiating so that noise is not amplified.
    """
    m = values.size
    spectrum = np.fft.fft(values)
    floor = 1e-13 * np.max(np.abs(spectrum))
    spectrum = np.where(np.abs(spectrum) < floor, 0.0, spectrum)
    wavenumbers = 2.0 * np.pi * np.fft.fftfreq(m, d=period / m)
    if m % 2 == 0:
        wavenumbers[m // 2] = 0.0
    return {k: np.fft.ifft((1j * wavenumbers) ** k * spectrum).real for k in orders}


def profile_from_samples(t: Sequence[float], h: Sequence[float], params: ModelParams) -> SolutionProfile:
    """
    Rebuild a profile from raw samples over one circle length.

    The samples must be uniform over [0, T] with both ends included; the
    derivatives are recomputed by periodic spectral differentiation.
    """
    t = np.asarray(t, dtype=float)
    h = np.asarray(h, dtype=float)
    if t.shape != h.shape or t.ndim != 1 or t.size < 8:
        raise ParameterError("profile samples need matching 1-d t and h columns with at least 8 rows")
    if np.any(h <= 0):
        raise PositivityError(f"profile has non-positive warping values (min {np.min(h)})")
    T = t[-1] - t[0]
    derivatives = spectral_derivatives(h[:-1], T)
    closed = {k: np.append(v, v[0]) for k, v in derivatives.items()}
    return SolutionProfile.from_h_chain(t - t[0], h, closed[1], closed[2], closed[3], params)


# ============================================================================
# Ricci derivative fields
# ============================================================================

def fiber_ricci_factor(params: ModelParams) -> float:
    """r0 = (R/(n-1)) g0 for an (n-1)-dimensional Einstein fiber of scalar curvature R."""
    return params.R / (params.n - 1)


def ricci_derivatives(p: SolutionProfile) -> RicciDerivativeFields:
    """
    Evaluate the scalar fields of nabla r along the profile:

        nabla_0 r_00 = -(n-1)/2 (q''' + q' q'')
        nabla_0 r_ij = [-q' r0 - 1/2 e^q (q''' + (n-1) q' q'')] g0_ij
        nabla_i r_0j = [-1/2 q' r0 - (n-2)/4 e^q q' q''] g0_ij
    """
    validate_profile(p)
    n = p.n
    r0 = fiber_ricci_factor(p.params)
    eq = np.exp(p.q)
    rho_000 = -(n - 1) / 2.0 * (p.q3 + p.q1 * p.q2)
    rho_0ij = -p.q1 * r0 - 0.5 * eq * (p.q3 + (n - 1) * p.q1 * p.q2)
    rho_i0j = -0.5 * p.q1 * r0 - (n - 2) / 4.0 * eq * p.q1 * p.q2
    codazzi = rho_0ij - rho_i0j
    sup_norms = {
        "rho_000": float(np.max(np.abs(rho_000))),
        "rho_0ij": float(np.max(np.abs(rho_0ij))),
        "rho_i0j": float(np.max(np.abs(rho_i0j))),
        "codazzi": float(np.max(np.abs(codazzi))),
    }
    return RicciDerivativeFields(
        rho_000=rho_000,
        rho_0ij_scalar=rho_0ij,
        rho_i0j_scalar=rho_i0j,
        codazzi_residual=codazzi,
        sup_norms=sup_norms,
    )


def harmonic_residual(p: SolutionProfile) -> float:
    """Sup over t of |nabla_0 r_ij - nabla_i r_0j| (scalar factors)."""
    return ricci_derivatives(p).sup_norms["codazzi"]


def ode_residual(p: SolutionProfile) -> OdeResidual:
    """
    Sup of |h'' - (nR/(4(n-1))) h^(1-4/n) + (n/4) C h| with the stored h'',
    with centered second differences and with the five-point fourth-order
    stencil (both with periodic wrap).

    The stencils assume the grid resolves h. Close to the homoclinic loop
    h dips towards zero over a few samples and both difference residuals
    grow with the dip while the stored residual stays at round-off.
    """
    validate_profile(p)
    params = p.params
    rhs = params.ode_coefficient * np.power(p.h, 1.0 - 4.0 / params.n) - params.n * params.C / 4.0 * p.h
    closed = float(np.max(np.abs(p.h2 - rhs)))

    h = p.h[:-1]
    dt = p.T / h.size
    second = (np.roll(h, -1) - 2.0 * h + np.roll(h, 1)) / dt ** 2
    finite_difference = float(np.max(np.abs(second - rhs[:-1])))
    fourth = (
        -np.roll(h, -2) + 16.0 * np.roll(h, -1) - 30.0 * h + 16.0 * np.roll(h, 1) - np.roll(h, 2)
    ) / (12.0 * dt ** 2)
    fourth_order = float(np.max(np.abs(fourth - rhs[:-1])))
    return OdeResidual(closed=closed, finite_difference=finite_difference, fourth_order=fourth_order)


def parallelism_pair(p: SolutionProfile) -> Dict[str, float]:
    """
    Sup norms of q''' + q' q'' and (n-1)(n-2) q'' e^q + 2R.

    Reported for documentation only: the second expression equals 2R for
    constant q, so this pair does not characterize parallel Ricci tensors.
    """
    n = p.n
    return {
        "third_order": float(np.max(np.abs(p.q3 + p.q1 * p.q2))),
        "curvature": float(np.max(np.abs((n - 1) * (n - 2) * p.q2 * np.exp(p.q) + 2.0 * p.params.R))),
    }


def parallelism_test(p: SolutionProfile, threshold: float = 1e-10) -> ParallelismVerdict:
    """
    Parallel iff every scalar field of nabla r has sup norm below threshold.
    """
    fields_ = ricci_derivatives(p)
    sup = max(fields_.sup_norms["rho_000"], fields_.sup_norms["rho_0ij"], fields_.sup_norms["rho_i0j"])
    verdict = "parallel" if sup < threshold else "non_parallel"
    return ParallelismVerdict(verdict=verdict, sup_norm=sup, pair_residuals=parallelism_pair(p))


# ============================================================================
# Conformal reparametrization and Codazzi tensors
# ============================================================================

def conformal_length(p: SolutionProfile) -> float:
    """
    Length int_0^T dt / h^(2/n) of the conformal circle parameter.

    The periodic trapezoidal rule on the uniform grid converges spectrally.
    """
    validate_profile(p)
    values = np.power(p.h[:-1], -2.0 / p.n)
    return float(p.T * np.mean(values))


def psi_from_profile(p: SolutionProfile) -> np.ndarray:
    """psi with h = e^(n psi / 2), i.e. psi = (2/n) log h."""
    return 2.0 / p.n * np.log(p.h)


def codazzi_trace(lam: np.ndarray, mu: np.ndarray, n: int) -> np.ndarray:
    """Trace of b with respect to dt^2 + e^(2 psi) g_N: lambda + (n-1) mu."""
    return lam + (n - 1) * mu


def codazzi_tensor_fields(psi: Sequence[float], c_tr: float, n: int) -> CodazziFields:
    """
    lambda = c/n + (1-n) c e^(-n psi), mu = c/n + c e^(-n psi).

    Raises:
        ParameterError: If c_tr = 0 (the two eigenvalues would coincide).
    """
    if c_tr == 0 or not math.isfinite(c_tr):
        raise ParameterError(f"trace constant must be finite and non-zero, got {c_tr}")
    if n < 3:
        raise ParameterError(f"dimension n must be at least 3, got {n}")
    psi = np.asarray(psi, dtype=float)
    decay = np.exp(-n * psi)
    lam = c_tr / n + (1 - n) * c_tr * decay
    mu = c_tr / n + c_tr * decay
    trace = codazzi_trace(lam, mu, n)
    distinct = bool(np.all(np.abs(lam - mu) > 0))
    return CodazziFields(lam=lam, mu=mu, trace=trace, distinct=distinct)
