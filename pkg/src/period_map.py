"""
Period function of a PotentialSystem.

The minimal period at energy c is T(c) = sqrt(2) * int_a^b du / sqrt(c - G(u))
with turning points G(a) = G(b) = c. The substitution u = a + (b - a) sin^2(theta)
removes both inverse-square-root singularities; the smooth integrand over
[0, pi/2] is integrated by Gauss-Legendre rules on a mesh graded
geometrically towards both ends, doubling the order until two successive
orders agree.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
from functools import lru_cache
from typing import Callable, List, Optional, Sequence, Tuple
import logging
import math
import numbers

import numpy as np
from scipy.optimize import brentq

from src.config import Config
from src.exceptions import (
    AccuracyError,
    BracketError,
    EnergyRangeError,
    LaboratoryError,
    ParameterError,
)
from src.potential_core import PotentialSystem, normalized_system, validate_dimension

logger = logging.getLogger(__name__)

GRADING_DEPTH = 40
ORDERS = (8, 16, 32, 64, 128)
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class TurningPoints:
    """Abscissae a < center < b with G(a) = G(b) = c."""
    a: float
    b: float
    c: float

    @property
    def amplitude(self) -> float:
        return self.b - self.a

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PeriodSample:
    """One energy level of the period map."""
    c: float
    turning: TurningPoints
    T: float
    quadrature_error_estimate: float
    dT: Optional[float] = None

    def to_row(self) -> dict:
        """Flat row with the period-table columns c, a, b, T, dT, err."""
        return {
            "c": self.c,
            "a": self.turning.a,
            "b": self.turning.b,
            "T": self.T,
            "dT": self.dT,
            "err": self.quadrature_error_estimate,
        }


@dataclass(frozen=True)
class CertificateReport:
    """Evaluation of the H and Delta monotonicity certificates on a grid."""
    n: int
    grid: List[float]
    H_values: List[float]
    Delta_values: List[float]
    H_positive: bool
    Delta_nonnegative: bool
    g_second_nonnegative: bool
    notes: str

    @property
    def H_min(self) -> float:
        return min(self.H_values)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TableError:
    """A period-table entry that could not be computed."""
    c: float
    reason: str
    message: str


@dataclass(frozen=True)
class PeriodTable:
    """Period samples sorted by energy, plus the entries that failed."""
    rows: List[PeriodSample] = field(default_factory=list)
    errors: List[TableError] = field(default_factory=list)


# ============================================================================
# Turning points
# ============================================================================

def check_energy(system: PotentialSystem, c: float, cutoff: float = 1.0) -> None:
    """
    Validate 0 < c < cutoff * c_max.

    Raises:
        EnergyRangeError: If c is not finite or outside the interval.
    """
    if isinstance(c, bool) or not (isinstance(c, numbers.Real) and math.isfinite(c)):
        raise EnergyRangeError(f"energy must be a finite real, got {c!r}")
    if c <= 0:
        raise EnergyRangeError(f"energy must be positive, got {c}", reason="energy_not_positive")
    if c >= cutoff * system.c_max:
        raise EnergyRangeError(
            f"energy {c} is not below {cutoff} * c_max = {cutoff * system.c_max} for {system.label}",
            reason="above_cutoff",
        )


def turning_points(system: PotentialSystem, c: float) -> TurningPoints:
    """
    Locate a in (domain_low, center) and b in (center, inf) with G = c.

    Both roots are bracketed and refined by Brent's method to relative
    precision 4 * machine epsilon.

    Raises:
        EnergyRangeError: If c <= 0 or c >= c_max.
        BracketError: If a root cannot be bracketed.
    """
    check_energy(system, c)
    center = system.center

    def level(x: float) -> float:
        return float(system.gap(center, x - center)) - c

    low = system.domain_low
    if not (level(low) > 0 > level(center)):
        raise BracketError(f"{system.label}: cannot bracket left turning point at energy {c}")
    a = brentq(level, low, center, xtol=1e-300, rtol=4 * _EPS, maxiter=500)

    hi = center + max(center, 1.0)
    for _ in range(200):
        if level(hi) > 0:
            break
        hi = center + 2.0 * (hi - center)
    else:
        raise BracketError(f"{system.label}: cannot bracket right turning point at energy {c}")
    b = brentq(level, center, hi, xtol=1e-300, rtol=4 * _EPS, maxiter=500)

    if not a < center < b:
        raise BracketError(f"{system.label}: turning points {a}, {b} do not enclose the center")
    logger.debug("turning points at c=%r: a=%r b=%r", c, a, b)
    return TurningPoints(a=a, b=b, c=c)


# ============================================================================
# Graded Gauss-Legendre quadrature on [0, pi/2]
# ============================================================================

@lru_cache(maxsize=None)
def _graded_rule(order: int, depth: int = GRADING_DEPTH) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of an order-`order` rule on every panel of the graded mesh."""
    quarter = math.pi / 4.0
    left = [quarter * 2.0 ** (-k) for k in range(depth, 0, -1)]
    right = [math.pi / 2.0 - quarter * 2.0 ** (-k) for k in range(1, depth + 1)]
    breaks = np.array([0.0] + left + [quarter] + right + [math.pi / 2.0])
    x, w = np.polynomial.legendre.leggauss(order)
    lo, hi = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + half * (x[None, :] + 1.0)).ravel()
    weights = (half * w[None, :]).ravel()
    return nodes, weights


def _integrate_theta(integrand: Callable[[np.ndarray], np.ndarray], quad_tol: float) -> Tuple[float, float]:
    """
    Integrate a smooth function of theta over [0, pi/2] by order doubling.

    Returns:
        (value, error estimate) where the estimate is the difference between
        the last two orders.
    """
    previous = None
    estimate = math.inf
    value = math.nan
    for order in ORDERS:
        nodes, weights = _graded_rule(order)
        value = float(np.dot(weights, integrand(nodes)))
        if previous is not None:
            estimate = abs(value - previous)
            logger.debug("order %d: value=%r estimate=%.3e", order, value, estimate)
            if estimate <= 0.1 * quad_tol * abs(value):
                break
        previous = value
    return value, estimate


def _distance_to_level(system: PotentialSystem, turning: TurningPoints, theta: np.ndarray):
    """
    c - G(u) and du/dtheta at u = a + (b - a) sin^2(theta).

    The left half is measured from a, the right half from b, so that the
    factor vanishing at each end is computed without cancellation.
    """
    a, b = turning.a, turning.b
    width = b - a
    s2 = np.sin(theta) ** 2
    c2 = np.cos(theta) ** 2
    left = theta < math.pi / 4.0
    distance = np.where(
        left,
        -system.gap(a, width * s2),
        -system.gap(b, -width * c2),
    )
    u = np.where(left, a + width * s2, b - width * c2)
    jacobian = width * np.sin(2.0 * theta)
    nonpositive = distance <= 0
    if np.any(nonpositive):
        logger.debug("%d quadrature nodes with c - G(u) <= 0 dropped", int(np.sum(nonpositive)))
        distance = np.where(nonpositive, np.inf, distance)
    return u, distance, jacobian


def _finish(system: PotentialSystem, c: float, value: float, estimate: float, config: Config, what: str) -> None:
    relative = estimate / abs(value) if value else estimate
    if not math.isfinite(value) or relative > config.accuracy_limit:
        raise AccuracyError(
            f"{what} of {system.label} at c={c}: relative error estimate {relative:.3e} "
            f"exceeds {config.accuracy_limit:.1e}",
            achieved=relative,
        )
    if relative > config.quad_tol:
        logger.warning("%s at c=%r reached only %.3e relative accuracy", what, c, relative)


# ============================================================================
# Period and its derivative
# ============================================================================

def period(
    system: PotentialSystem,
    c: float,
    config: Optional[Config] = None,
    cutoff: Optional[float] = None,
) -> PeriodSample:
    """
    Minimal period of the closed orbit at energy c.

    Args:
        system: The potential system.
        c: Energy, 0 < c < cutoff * c_max.
        config: Tolerances (defaults if None).
        cutoff: Fraction of c_max above which energies are rejected
            (config.energy_cutoff if None).

    Returns:
        PeriodSample with T and the quadrature error estimate (dT unset).

    Raises:
        EnergyRangeError: Energy outside the admissible range.
        AccuracyError: Quadrature did not reach config.accuracy_limit.
    """
    config = config or Config()
    cutoff = config.energy_cutoff if cutoff is None else cutoff
    check_energy(system, c, cutoff)
    turning = turning_points(system, c)

    def integrand(theta: np.ndarray) -> np.ndarray:
        _, distance, jacobian = _distance_to_level(system, turning, theta)
        return math.sqrt(2.0) * jacobian / np.sqrt(distance)

    value, estimate = _integrate_theta(integrand, config.quad_tol)
    _finish(system, c, value, estimate, config, "period")
    return PeriodSample(c=c, turning=turning, T=value, quadrature_error_estimate=estimate)


def period_derivative(
    system: PotentialSystem,
    c: float,
    config: Optional[Config] = None,
    cutoff: Optional[float] = None,
) -> float:
    """
    dT/dc by Richardson-extrapolated central differences of period().

    The step is 1% of the distance to the nearer end of the admissible range.
    """
    config = config or Config()
    cutoff = config.energy_cutoff if cutoff is None else cutoff
    check_energy(system, c, cutoff)
    h = 1e-2 * min(c, cutoff * system.c_max - c)

    def central(step: float) -> float:
        upper = period(system, c + step, config, cutoff).T
        lower = period(system, c - step, config, cutoff).T
        return (upper - lower) / (2.0 * step)

    coarse = central(h)
    fine = central(0.5 * h)
    return (4.0 * fine - coarse) / 3.0


def period_derivative_integral(
    system: PotentialSystem,
    c: float,
    config: Optional[Config] = None,
    cutoff: Optional[float] = None,
) -> Tuple[float, float]:
    """
    dT/dc from the integral expression

        T'(c) = 1/(sqrt(2) c) * int_a^b (phi^2 - 2 G phi') / (phi^2 sqrt(c - G)) du

    The factor 1/sqrt(2) matches the sqrt(2) in the period integral. The
    integrand has a removable 0/0 at the center, where it tends to 0.

    Returns:
        (value, quadrature error estimate)
    """
    config = config or Config()
    cutoff = config.energy_cutoff if cutoff is None else cutoff
    check_energy(system, c, cutoff)
    turning = turning_points(system, c)

    def integrand(theta: np.ndarray) -> np.ndarray:
        u, distance, jacobian = _distance_to_level(system, turning, theta)
        force = system.phi(u)
        numerator = force ** 2 - 2.0 * system.G(u) * system.dphi(u)
        tiny = np.abs(force) < 1e-150
        ratio = np.where(tiny, 0.0, numerator / np.where(tiny, 1.0, force ** 2))
        return ratio * jacobian / np.sqrt(distance)

    value, estimate = _integrate_theta(integrand, config.quad_tol)
    value /= math.sqrt(2.0) * c
    estimate /= math.sqrt(2.0) * c
    if not math.isfinite(value):
        raise AccuracyError(f"period derivative integral of {system.label} at c={c} is not finite")
    return value, estimate


def derdzinski_period_sup(n: int) -> float:
    """
    Period of the homoclinic loop of the normalized Derdzinski system, n*pi/2.

    The loop reaches f = 0 in finite time, so the period map is bounded:
    it runs between pi*sqrt(n) (small amplitude) and n*pi/2. The two agree
    only for n = 4.
    """
    n = validate_dimension(n)
    return n * math.pi / 2.0


# ============================================================================
# Monotonicity certificates
# ============================================================================

def monotonicity_certificate(
    n: int,
    grid_min: float = 0.05,
    grid_max: float = 4.0,
    grid_count: int = 2000,
    exclusion: float = 1e-3,
) -> CertificateReport:
    """
    Evaluate the certificates for g(f) = f - f^(1-4/n):

        H(x) = g^2 - 2 G g' + g''(1) / (3 g'(1)^2) * g^3
        Delta(x) = (x - 1) [g'(x) g''(1) - g'(1) g''(x)]

    with exact g'(1) = 4/n and g''(1) = (4/n)(1 - 4/n). H > 0 away from
    the center implies a non-decreasing period; g'' >= 0 together with
    Delta >= 0 implies H > 0.

    Raises:
        ParameterError: For degenerate grids.
    """
    n = validate_dimension(n)
    if not (math.isfinite(grid_min) and math.isfinite(grid_max) and 0 < grid_min < grid_max):
        raise ParameterError(f"grid must satisfy 0 < grid_min < grid_max, got [{grid_min}, {grid_max}]")
    if grid_count < 2:
        raise ParameterError(f"grid_count must be at least 2, got {grid_count}")
    if not exclusion >= 0:
        raise ParameterError(f"exclusion must be non-negative, got {exclusion}")

    grid = np.linspace(grid_min, grid_max, grid_count)
    grid = grid[np.abs(grid - 1.0) >= exclusion]
    if grid.size == 0:
        raise ParameterError("grid is empty after excluding the center neighbourhood")

    q = 4.0 / n
    p = 1.0 - q
    system = normalized_system(n)
    g = grid - np.power(grid, p)
    g1 = 1.0 - p * np.power(grid, -q)
    g2 = p * q * np.power(grid, -q - 1.0)
    g1_center = q
    g2_center = p * q

    H = g ** 2 - 2.0 * system.G(grid) * g1 + g2_center / (3.0 * g1_center ** 2) * g ** 3
    Delta = (grid - 1.0) * (g1 * g2_center - g1_center * g2)

    H_positive = bool(np.all(H > 0))
    Delta_nonnegative = bool(np.all(Delta >= 0))
    g_second_nonnegative = bool(np.all(g2 >= 0))

    notes = []
    if n == 4:
        notes.append("n = 4: g(f) = f - 1, the equation is linear and H, Delta vanish identically.")
    elif n == 3:
        notes.append(
            "n = 3: g'' < 0, so the Delta route does not apply; the implication "
            "g'' < 0 => H > 0 is checked by evaluating H directly."
        )
        if not H_positive:
            notes.append(
                f"H is negative on part of the grid (min {float(np.min(H)):.3e}): "
                "the period map decreases for n = 3."
            )
    else:
        notes.append("n >= 5: g'' >= 0 and Delta >= 0 give H > 0.")
    logger.debug("certificate n=%d: H_positive=%s Delta_nonnegative=%s", n, H_positive, Delta_nonnegative)

    return CertificateReport(
        n=n,
        grid=grid.tolist(),
        H_values=H.tolist(),
        Delta_values=Delta.tolist(),
        H_positive=H_positive,
        Delta_nonnegative=Delta_nonnegative,
        g_second_nonnegative=g_second_nonnegative,
        notes=" ".join(notes),
    )


# ============================================================================
# Tables
# ============================================================================

def _table_entry(system: PotentialSystem, c: float, config: Config):
    try:
        sample = period(system, c, config)
        dT = period_derivative(system, c, config)
        return PeriodSample(
            c=sample.c,
            turning=sample.turning,
            T=sample.T,
            quadrature_error_estimate=sample.quadrature_error_estimate,
            dT=dT,
        )
    except LaboratoryError as e:
        return TableError(c=c, reason=e.reason, message=str(e))


def period_table(
    system: PotentialSystem,
    energies: Sequence[float],
    config: Optional[Config] = None,
) -> PeriodTable:
    """
    Period samples (with dT) for a list of energies, sorted by energy.

    Failures are collected per entry instead of aborting the table. With
    config.max_threads > 1 entries are evaluated on a thread pool; the
    output does not depend on evaluation order.
    """
    config = config or Config()
    energies = sorted(float(c) for c in energies)
    if config.max_threads and config.max_threads > 1 and len(energies) > 1:
        with ThreadPoolExecutor(max_workers=config.max_threads) as pool:
            results = list(pool.map(lambda c: _table_entry(system, c, config), energies))
    else:
        results = [_table_entry(system, c, config) for c in energies]

    rows = [r for r in results if isinstance(r, PeriodSample)]
    errors = [r for r in results if isinstance(r, TableError)]
    for error in errors:
        logger.warning("period table entry c=%r failed: %s", error.c, error.message)
    return PeriodTable(rows=rows, errors=errors)


def log_spaced_energies(system: PotentialSystem, count: int, low: float = 1e-6, high_fraction: float = 0.99) -> List[float]:
    """count energies log-spaced in [low, high_fraction * c_max]."""
    if count < 0:
        raise ParameterError(f"count must be non-negative, got {count}")
    if count == 0:
        return []
    high = high_fraction * system.c_max
    if not 0 < low < high:
        raise ParameterError(f"energy grid needs 0 < low < high, got [{low}, {high}]")
    return np.geomspace(low, high, count).tolist()
