"""
Pseudo-cylindric metrics u^(4/(n-2)) (dt^2 + g_{S^(n-1)}) on S^1(T) x S^(n-1).

Constant scalar curvature n(n-1) for a function u of t alone means

    u'' - ((n-2)^2/4) u + (n(n-2)/4) u^((n+2)/(n-2)) = 0,

which is handled as the potential system u'' + phi_Y(u) = 0 and counted
with the same machinery as the warping equation.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence
import logging
import math

import numpy as np

from src.config import Config
from src.exceptions import LaboratoryError, ParameterError, PositivityError
from src.orbit_solver import (
    BifurcationPoint,
    FamilyEntry,
    MetricCensus,
    count_families,
    dense_orbit,
    theorem_bracket,
)
from src.period_map import check_energy, period
from src.potential_core import PotentialSystem, validate_dimension

logger = logging.getLogger(__name__)

MONOTONICITY_GRID = 12


@dataclass(frozen=True)
class YamabeSystem:
    """The Yamabe ODE for dimension n and its constant solution beta_const."""
    n: int
    underlying: PotentialSystem
    beta_const: float

    @property
    def exponent(self) -> float:
        return self.underlying.exponent


@dataclass(frozen=True)
class YamabeProfile:
    """Samples of u and u' on [0, T], both ends included."""
    t_grid: np.ndarray
    u: np.ndarray
    u1: np.ndarray
    n: int
    c: float
    closure_distance: float = 0.0


def yamabe_system(n: int) -> YamabeSystem:
    """
    Build the Yamabe system for dimension n.

    c_max is G_Y(0^+) = (n-2)^2 beta^2 / (4n), the energy of the loop
    through u = 0.
    """
    n = validate_dimension(n)
    beta = ((n - 2) / n) ** ((n - 2) / 4.0)
    system = PotentialSystem(
        label=f"yamabe(n={n})",
        linear_coeff=-((n - 2) ** 2) / 4.0,
        power_coeff=n * (n - 2) / 4.0,
        exponent=(n + 2) / (n - 2),
        center=beta,
        c_max=(n - 2) ** 2 * beta ** 2 / (4.0 * n),
    )
    return YamabeSystem(n=n, underlying=system, beta_const=beta)


def yamabe_threshold(n: int) -> float:
    """2 pi / sqrt(n-2): below this circle length only the cylinder exists."""
    n = validate_dimension(n)
    return 2.0 * math.pi / math.sqrt(n - 2)


def yamabe_bifurcation_points(n: int, k_max: int) -> List[BifurcationPoint]:
    """T_k = 2 pi k / sqrt(n-2) with the constant solution as u_k."""
    if k_max < 0:
        raise ParameterError(f"k_max must be non-negative, got {k_max}")
    ys = yamabe_system(n)
    T1 = yamabe_threshold(n)
    return [BifurcationPoint(k=k, T_k=k * T1, u_k=ys.beta_const) for k in range(1, k_max + 1)]


def period_is_increasing(ys: YamabeSystem, config: Optional[Config] = None, count: int = MONOTONICITY_GRID) -> bool:
    """Check T(c) strictly increasing on a log-spaced grid up to the census cutoff."""
    config = config or Config()
    c_max = ys.underlying.c_max
    energies = np.geomspace(1e-6 * c_max, 0.999 * config.census_cutoff * c_max, count)
    values = [period(ys.underlying, float(c), config, config.census_cutoff).T for c in energies]
    return bool(np.all(np.diff(values) > 0))


def yamabe_profile(
    n: int,
    c: float,
    T: float,
    samples: Optional[int] = None,
    config: Optional[Config] = None,
) -> YamabeProfile:
    """Sample the orbit of energy c (started at its maximum) over [0, T]; c = 0 gives u = beta_const."""
    config = config or Config()
    ys = yamabe_system(n)
    m = samples or config.profile_samples
    if not (math.isfinite(T) and T > 0):
        raise ParameterError(f"circle length must be positive, got {T}")
    t = np.linspace(0.0, T, m + 1)
    if c == 0:
        return YamabeProfile(t, np.full_like(t, ys.beta_const), np.zeros_like(t), ys.n, 0.0)
    check_energy(ys.underlying, c, config.census_cutoff)
    sol, tau, closure = dense_orbit(ys.underlying, c, config, config.census_cutoff)
    u, u1 = sol(np.mod(t, tau))
    if np.any(u <= 0):
        raise PositivityError(f"Yamabe orbit at c={c} is not positive (min {np.min(u)})")
    return YamabeProfile(t, u, u1, ys.n, c, closure)


def yamabe_residual(t: Sequence[float], u: Sequence[float], n: int) -> float:
    """
    Sup norm of u'' - ((n-2)^2/4) u + (n(n-2)/4) u^((n+2)/(n-2)) with u''
    from periodic centered differences.

    t must be uniform over one period with the endpoint repeated.

    Raises:
        PositivityError: If some sample of u is not positive.
    """
    n = validate_dimension(n)
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    if t.shape != u.shape or t.size < 4:
        raise ParameterError("t and u must be equally long with at least 4 samples")
    if np.any(u <= 0) or not np.all(np.isfinite(u)):
        raise PositivityError(f"u must be positive and finite (min {np.min(u)})")
    dt = (t[-1] - t[0]) / (t.size - 1)
    body = u[:-1]
    second = (np.roll(body, -1) - 2.0 * body + np.roll(body, 1)) / dt ** 2
    residual = second - (n - 2) ** 2 / 4.0 * body + n * (n - 2) / 4.0 * np.power(body, (n + 2) / (n - 2))
    return float(np.max(np.abs(residual)))


def _verify(entry: FamilyEntry, prof: YamabeProfile, config: Config) -> None:
    entry.residuals["closure"] = prof.closure_distance
    entry.residuals["yamabe"] = yamabe_residual(prof.t_grid, prof.u, prof.n)
    if prof.closure_distance > config.closure_tol:
        entry.flags.append("non_closure")


def yamabe_census(n: int, T: float, config: Optional[Config] = None) -> MetricCensus:
    """
    Count pseudo-cylindric metrics on S^1(T) x S^(n-1): the cylinder plus
    one family per j with T/j attained by the Yamabe period map.
    """
    config = config or Config()
    ys = yamabe_system(n)
    m = config.profile_samples

    diagnostics = []
    if not period_is_increasing(ys, config):
        logger.warning("Yamabe period map for n=%d is not increasing on the check grid", ys.n)
        diagnostics.append(f"period map of {ys.underlying.label} failed the monotonicity check; counts may be incomplete")

    constant = FamilyEntry(kind="constant", j=None, c=0.0, c_physical=0.0, minimal_period=0.0)
    _verify(constant, yamabe_profile(ys.n, 0.0, T, m, config), config)
    families = [constant]

    entries, interval, notes = count_families(ys.underlying, 1.0, T, config)
    diagnostics.extend(notes)
    for j, c, tau, flags in entries:
        if "degenerate" in flags:
            families.append(FamilyEntry(kind="degenerate", j=j, c=0.0, c_physical=0.0, minimal_period=tau, flags=flags))
            continue
        entry = FamilyEntry(kind="nonconstant", j=j, c=c, c_physical=c, minimal_period=tau, flags=list(flags))
        try:
            _verify(entry, yamabe_profile(ys.n, c, T, m, config), config)
        except LaboratoryError as e:
            entry.flags.append(f"verification_failed:{e.reason}")
        families.append(entry)

    return MetricCensus(
        T=T,
        params=None,
        families=families,
        attainable_periods=interval,
        bracket_k=theorem_bracket(T, yamabe_threshold(ys.n)),
        diagnostics=diagnostics,
    )
