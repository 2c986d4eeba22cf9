"""
Orbits, period inversion and the census of warped metrics.

A non-constant T-periodic warping function of minimal period T/j comes
from the orbit whose period equals T/j; orbits on the same energy level
differ by a time translation, so the census counts one family per
attainable divisor j plus the constant solution.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple
import logging
import math

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from src.config import Config
from src.exceptions import (
    AccuracyError,
    ClosureError,
    LaboratoryError,
    ParameterError,
    PeriodTargetError,
    PositivityError,
)
from src.period_map import check_energy, period
from src.potential_core import (
    ModelParams,
    PotentialSystem,
    derive_params,
    normalized_system,
    physical_energy,
)
from src.ricci_check import (
    SolutionProfile,
    harmonic_residual,
    ode_residual,
    parallelism_test,
)

logger = logging.getLogger(__name__)

PERIOD_MATCH_TOL = 1e-9
DEGENERATE_TOL = 1e-12

# Fourth-order Yoshida composition of the velocity Verlet step
_CBRT2 = 2.0 ** (1.0 / 3.0)
_W1 = 1.0 / (2.0 - _CBRT2)
_W0 = -_CBRT2 / (2.0 - _CBRT2)
YOSHIDA_WEIGHTS = (_W1, _W0, _W1)


@dataclass(frozen=True)
class Orbit:
    """One or more periods of a closed orbit sampled at fixed steps."""
    c: float
    period: float
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    energy_drift: float
    closure_distance: float

    @property
    def samples(self) -> List[Tuple[float, float, float]]:
        return list(zip(self.t.tolist(), self.x.tolist(), self.v.tolist()))


@dataclass(frozen=True)
class BifurcationPoint:
    """Circle length T_k where the k-th non-constant branch leaves the constant solution."""
    k: int
    T_k: float
    u_k: float


@dataclass
class FamilyEntry:
    """
    One translation class of solutions.

    kind is "constant", "nonconstant" or "degenerate" (zero-amplitude marker
    at a bifurcation length, not counted).
    """
    kind: str
    j: Optional[int]
    c: Optional[float]
    c_physical: Optional[float]
    minimal_period: float
    residuals: Dict[str, float] = field(default_factory=dict)
    parallel: Optional[str] = None
    flags: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "j": self.j,
            "c": self.c,
            "c_physical": self.c_physical,
            "minimal_period": self.minimal_period,
            "residuals": dict(self.residuals),
            "parallel": self.parallel,
            "flags": list(self.flags),
        }


@dataclass
class MetricCensus:
    """Solution families for one circle length."""
    T: float
    params: Optional[ModelParams]
    families: List[FamilyEntry]
    attainable_periods: Tuple[float, float]
    bracket_k: int
    diagnostics: List[str] = field(default_factory=list)

    @property
    def count(self) -> int:
        return sum(1 for f in self.families if f.kind in ("constant", "nonconstant"))

    @property
    def bracket_consistent(self) -> bool:
        return self.count == self.bracket_k

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "params": self.params.to_dict() if self.params else None,
            "count": self.count,
            "bracket_k": self.bracket_k,
            "bracket_consistent": self.bracket_consistent,
            "attainable_periods": list(self.attainable_periods),
            "families": [f.to_dict() for f in self.families],
            "diagnostics": list(self.diagnostics),
        }


# ============================================================================
# Symplectic integration
# ============================================================================

def integrate_orbit(
    system: PotentialSystem,
    c: float,
    steps_per_period_hint: Optional[int] = None,
    periods: int = 1,
    config: Optional[Config] = None,
    closure_tol: Optional[float] = None,
) -> Orbit:
    """
    Integrate x'' + phi(x) = 0 from the right turning point (b, 0) with a
    fixed-step fourth-order symplectic scheme over whole periods.

    Args:
        system: The potential system.
        c: Energy level.
        steps_per_period_hint: Steps per period (config.steps_per_period if None).
        periods: Number of minimal periods to integrate.
        config: Tolerances.
        closure_tol: If given, raise ClosureError when the final state is
            farther than this from the initial state.

    Raises:
        ClosureError: Non-closure beyond closure_tol.
        PositivityError: If the orbit leaves the domain.
    """
    config = config or Config()
    steps = steps_per_period_hint or config.steps_per_period
    if steps < 4 or periods < 1:
        raise ParameterError(f"need at least 4 steps and 1 period, got {steps} steps, {periods} periods")
    sample = period(system, c, config)
    tau = sample.T
    x0 = sample.turning.b

    k1, k2, e = system.linear_coeff, system.power_coeff, system.exponent
    low = system.domain_low
    total = steps * periods
    dt = tau / steps
    xs = np.empty(total + 1)
    vs = np.empty(total + 1)
    x, v = x0, 0.0
    xs[0], vs[0] = x, v
    force = k1 * x + k2 * x ** e
    for i in range(1, total + 1):
        for w in YOSHIDA_WEIGHTS:
            h = w * dt
            v -= 0.5 * h * force
            x += h * v
            if x <= low:
                raise PositivityError(f"orbit left the domain at step {i} (x = {x})", achieved=x)
            force = k1 * x + k2 * x ** e
            v -= 0.5 * h * force
        xs[i], vs[i] = x, v

    t = np.arange(total + 1) * dt
    drift = float(np.max(np.abs(system.energy(xs, vs) - c)))
    closure = math.hypot(xs[-1] - xs[0], vs[-1] - vs[0])
    logger.debug("orbit c=%r: %d steps, drift %.3e, closure %.3e", c, total, drift, closure)
    if closure_tol is not None and closure > closure_tol:
        raise ClosureError(
            f"orbit at c={c} does not close: distance {closure:.3e} > {closure_tol:.1e}",
            achieved=closure,
        )
    return Orbit(c=c, period=tau, t=t, x=xs, v=vs, energy_drift=drift, closure_distance=closure)


def dense_orbit(system: PotentialSystem, c: float, config: Optional[Config] = None, cutoff: Optional[float] = None):
    """
    High-accuracy adaptive solution over one period starting at (b, 0).

    Returns:
        (dense solution callable, period, closure distance)
    """
    config = config or Config()
    sample = period(system, c, config, cutoff)
    tau = sample.T

    def rhs(_, y):
        return [y[1], -system.phi(max(y[0], 1e-300))]

    solution = solve_ivp(
        rhs,
        (0.0, tau),
        [sample.turning.b, 0.0],
        method="DOP853",
        rtol=1e-12,
        atol=1e-14,
        dense_output=True,
    )
    if not solution.success:
        raise AccuracyError(f"orbit integration at c={c} failed: {solution.message}")
    end = solution.y[:, -1]
    closure = math.hypot(end[0] - sample.turning.b, end[1])
    return solution.sol, tau, closure


# ============================================================================
# Period inversion
# ============================================================================

def is_isochronous(system: PotentialSystem, config: Optional[Config] = None) -> bool:
    """True if the period map is constant (checked at mid-range energy)."""
    config = config or Config()
    mid = period(system, 0.5 * config.energy_cutoff * system.c_max, config).T
    return abs(mid - system.linear_period) < 1e-9 * system.linear_period


def energy_for_period(
    system: PotentialSystem,
    T_target: float,
    config: Optional[Config] = None,
    cutoff: Optional[float] = None,
) -> float:
    """
    The energy whose minimal period equals T_target.

    The period map is monotone, so the root is bracketed between a
    near-zero energy and the cutoff energy and refined by Brent's method.

    Raises:
        PeriodTargetError: reason "below_minimum" when T_target lies beyond
            the small-amplitude limit, "above_cutoff" when it lies beyond
            the period at the cutoff, "isochronous" for a constant period map.
    """
    config = config or Config()
    cutoff = config.energy_cutoff if cutoff is None else cutoff
    if not (math.isfinite(T_target) and T_target > 0):
        raise ParameterError(f"target period must be positive, got {T_target}")
    T_lin = system.linear_period
    c_lo = 1e-10 * system.c_max
    c_hi = float(np.nextafter(cutoff * system.c_max, 0.0))
    T_lo = period(system, c_lo, config, cutoff).T
    T_hi = period(system, c_hi, config, cutoff).T

    if abs(T_hi - T_lin) < 1e-9 * T_lin:
        raise PeriodTargetError(
            f"{system.label} is isochronous with period {T_lin}; the energy for period {T_target} is not determined",
            reason="isochronous", target=T_target, limit=T_lin,
        )
    increasing = T_hi > T_lin
    beyond_linear = T_target <= T_lo if increasing else T_target >= T_lo
    if beyond_linear:
        raise PeriodTargetError(
            f"target period {T_target} is beyond the small-amplitude limit {T_lin} of {system.label}: "
            "only constant solutions exist",
            reason="below_minimum", target=T_target, limit=T_lin,
        )
    beyond_cutoff = T_target >= T_hi if increasing else T_target <= T_hi
    if beyond_cutoff:
        raise PeriodTargetError(
            f"target period {T_target} is beyond the period {T_hi} reached at {cutoff} * c_max",
            reason="above_cutoff", target=T_target, limit=T_hi,
        )

    c = brentq(
        lambda energy: period(system, energy, config, cutoff).T - T_target,
        c_lo, c_hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=200,
    )
    achieved = abs(period(system, c, config, cutoff).T - T_target)
    if achieved > PERIOD_MATCH_TOL * max(1.0, T_target):
        raise AccuracyError(f"period inversion reached only {achieved:.3e} for target {T_target}", achieved=achieved)
    logger.debug("energy for period %r: c=%r", T_target, c)
    return c


# ============================================================================
# Profiles
# ============================================================================

def constant_profile(params: ModelParams, T: float, sample_count: Optional[int] = None) -> SolutionProfile:
    """The constant solution h = alpha sampled over [0, T]."""
    m = sample_count or Config().profile_samples
    alpha = derive_params(params).alpha
    t = np.linspace(0.0, T, m + 1)
    zero = np.zeros_like(t)
    return SolutionProfile.from_h_chain(t, np.full_like(t, alpha), zero, zero, zero, params, c=0.0)


def profile(
    params: ModelParams,
    c: float,
    T: float,
    sample_count: Optional[int] = None,
    phase: float = 0.0,
    config: Optional[Config] = None,
) -> SolutionProfile:
    """
    Sample h, h', h'', h''' over [0, T] for the orbit of normalized energy c.

    h(t) = alpha f(beta (t + phase)) where f starts at its maximum; h'' is
    closed through the ODE and h''' by differentiating it. c = 0 gives the
    constant solution.

    Raises:
        PositivityError: If h is not positive.
    """
    config = config or Config()
    if not (math.isfinite(T) and T > 0):
        raise ParameterError(f"circle length must be positive, got {T}")
    m = sample_count or config.profile_samples
    if m < 8:
        raise ParameterError(f"sample_count must be at least 8, got {m}")
    if c == 0:
        return constant_profile(params, T, m)

    derived = derive_params(params)
    system = normalized_system(params.n)
    check_energy(system, c, config.census_cutoff)
    sol, tau, closure = dense_orbit(system, c, config, config.census_cutoff)

    periods = T * derived.beta / tau
    if abs(periods - round(periods)) > 1e-6:
        logger.warning("profile over T=%r covers %.6f minimal periods; it is not T-periodic", T, periods)

    t = np.linspace(0.0, T, m + 1)
    s = np.mod(derived.beta * (t + phase), tau)
    f, f1 = sol(s)
    h = derived.alpha * f
    h1 = derived.alpha * derived.beta * f1
    if np.any(h <= 0):
        raise PositivityError(f"warping function not positive at c={c} (min {np.min(h)})")
    e = 1.0 - 4.0 / params.n
    K = params.ode_coefficient
    h2 = K * np.power(h, e) - params.n * params.C / 4.0 * h
    h3 = e * K * np.power(h, -4.0 / params.n) * h1 - params.n * params.C / 4.0 * h1
    return SolutionProfile.from_h_chain(t, h, h1, h2, h3, params, c=c, closure_distance=closure)


def translate_profile(p: SolutionProfile, shift: int) -> SolutionProfile:
    """The profile t -> h(t + shift * dt), shifting by whole grid steps."""
    def roll(values: np.ndarray) -> np.ndarray:
        body = np.roll(values[:-1], -shift)
        return np.append(body, body[0])

    return SolutionProfile.from_h_chain(
        p.t_grid, roll(p.h), roll(p.h1), roll(p.h2), roll(p.h3),
        p.params, c=p.c, closure_distance=p.closure_distance,
    )


def optimal_shift_distance(p: SolutionProfile, q: SolutionProfile) -> float:
    """min over grid shifts k of max |h_p(t) - h_q(t + k dt)|."""
    a = p.h[:-1]
    b = q.h[:-1]
    if a.shape != b.shape:
        raise ParameterError("profiles must have the same number of samples")
    return float(min(np.max(np.abs(a - np.roll(b, k))) for k in range(a.size)))


# ============================================================================
# Census
# ============================================================================

def critical_constant(T: float) -> float:
    """4 pi^2 / T^2: for C at or below this value only the constant solution is T-periodic."""
    if not (math.isfinite(T) and T > 0):
        raise ParameterError(f"circle length must be positive, got {T}")
    return 4.0 * math.pi ** 2 / T ** 2


def theorem_bracket(T: float, linear_period: float) -> int:
    """k with (k-1) * linear_period < T <= k * linear_period."""
    return max(1, math.ceil(T / linear_period - DEGENERATE_TOL))


def attainable_periods(system: PotentialSystem, time_scale: float, config: Config) -> Tuple[float, float]:
    """Open interval of physical minimal periods reached by energies in (0, census_cutoff * c_max)."""
    c_hi = float(np.nextafter(config.census_cutoff * system.c_max, 0.0))
    T_cut = period(system, c_hi, config, config.census_cutoff).T / time_scale
    T_lin = system.linear_period / time_scale
    return (min(T_lin, T_cut), max(T_lin, T_cut))


def count_families(
    system: PotentialSystem,
    time_scale: float,
    T: float,
    config: Config,
) -> Tuple[List[Tuple[int, Optional[float], float, List[str]]], Tuple[float, float], List[str]]:
    """
    Solve for every divisor j whose target T/j is attained by the period map.

    Returns:
        (entries, attainable interval, diagnostics); entries are
        (j, normalized energy or None, minimal period, flags). Degenerate
        bifurcation markers carry the flag "degenerate" and no energy.
        Every energy solves an isochronous target, so those families carry
        the mid-range energy half way to the cutoff.
    """
    if not (math.isfinite(T) and T > 0):
        raise ParameterError(f"circle length must be positive, got {T}")
    T_lin = system.linear_period / time_scale
    entries = []
    diagnostics = []

    ratio = T / T_lin
    if abs(ratio - round(ratio)) < DEGENERATE_TOL and round(ratio) >= 1:
        entries.append((int(round(ratio)), None, T_lin, ["degenerate"]))

    if is_isochronous(system, config):
        interval = (T_lin, T_lin)
        representative = 0.5 * config.energy_cutoff * system.c_max
        for j in range(1, int(T / T_lin + config.closure_tol) + 1):
            if abs(T / j - T_lin) < config.closure_tol:
                entries = [e for e in entries if e[0] != j]
                entries.append((j, representative, T / j, ["isochronous"]))
        diagnostics.append(
            f"isochronous period map (period {T_lin}): every energy has the same period, "
            "non-constant families exist only when T/j equals it"
        )
        return sorted(entries, key=lambda e: e[0]), interval, diagnostics

    interval = attainable_periods(system, time_scale, config)
    low, high = interval
    j_min = max(1, math.floor(T / high) + 1)
    j_max = math.ceil(T / low) - 1
    for j in range(j_min, j_max + 1):
        target = T / j
        if not low < target < high or any(e[0] == j for e in entries):
            continue
        try:
            c = energy_for_period(system, target * time_scale, config, config.census_cutoff)
        except PeriodTargetError as e:
            diagnostics.append(f"family j={j}: {e}")
            continue
        entries.append((j, c, target, []))
    logger.debug("T=%r: %d non-constant candidates in %r", T, len(entries), interval)
    return sorted(entries, key=lambda e: e[0]), interval, diagnostics


def _verify_family(entry: FamilyEntry, prof: SolutionProfile, config: Config) -> None:
    fields_ok = True
    entry.residuals["closure"] = prof.closure_distance
    try:
        entry.residuals["codazzi"] = harmonic_residual(prof)
        ode = ode_residual(prof)
        entry.residuals["ode_finite_difference"] = ode.finite_difference
        entry.residuals["ode_fourth_order"] = ode.fourth_order
        verdict = parallelism_test(prof, config.parallel_tol)
        entry.parallel = verdict.verdict
        entry.residuals["ricci_sup"] = verdict.sup_norm
    except LaboratoryError as e:
        fields_ok = False
        entry.flags.append(f"verification_failed:{e.reason}")
    if fields_ok and prof.closure_distance > config.closure_tol:
        entry.flags.append("non_closure")


def census(params: ModelParams, T: float, config: Optional[Config] = None) -> MetricCensus:
    """
    Census of warped metrics dt^2 + h^(4/n) g0 on S^1(T) x N.

    Always lists the constant family h = alpha, then one non-constant
    family per divisor j whose minimal period T/j is attained. Each family
    is sampled and checked for orbit closure, the Codazzi identity, the
    ODE residual and Ricci parallelism; failures are flagged, not dropped.
    """
    config = config or Config()
    derived = derive_params(params)
    system = normalized_system(params.n)
    m = config.profile_samples

    constant = FamilyEntry(kind="constant", j=None, c=0.0, c_physical=0.0, minimal_period=0.0)
    _verify_family(constant, constant_profile(params, T, m), config)
    families = [constant]

    entries, interval, diagnostics = count_families(system, derived.beta, T, config)
    for j, c, tau, flags in entries:
        if "degenerate" in flags:
            families.append(FamilyEntry(kind="degenerate", j=j, c=0.0, c_physical=0.0, minimal_period=tau, flags=flags))
            continue
        entry = FamilyEntry(
            kind="nonconstant",
            j=j,
            c=c,
            c_physical=physical_energy(params, c),
            minimal_period=tau,
            flags=list(flags),
        )
        try:
            _verify_family(entry, profile(params, c, T, m, config=config), config)
        except LaboratoryError as e:
            entry.flags.append(f"verification_failed:{e.reason}")
        families.append(entry)

    k = theorem_bracket(T, derived.T_min)
    result = MetricCensus(
        T=T,
        params=params,
        families=families,
        attainable_periods=interval,
        bracket_k=k,
        diagnostics=diagnostics,
    )
    if not result.bracket_consistent:
        result.diagnostics.append(
            f"count {result.count} differs from the circle-length bracket k={k}: minimal periods are "
            f"attained only in ({interval[0]}, {interval[1]})"
        )
    return result


def bifurcation_lengths(C: float, k_max: int) -> List[float]:
    """T_k = 2 pi k / sqrt(C) for k = 1..k_max."""
    if not (math.isfinite(C) and C > 0):
        raise ParameterError(f"constant C must be positive, got {C}")
    if k_max < 0:
        raise ParameterError(f"k_max must be non-negative, got {k_max}")
    return [2.0 * math.pi * k / math.sqrt(C) for k in range(1, k_max + 1)]


def bifurcation_points(params: ModelParams, k_max: int) -> List[BifurcationPoint]:
    """(k, 2 pi k / sqrt(C), alpha) for k = 1..k_max."""
    alpha = derive_params(params).alpha
    lengths = bifurcation_lengths(params.C, k_max)
    return [BifurcationPoint(k=k, T_k=T_k, u_k=alpha) for k, T_k in enumerate(lengths, start=1)]
