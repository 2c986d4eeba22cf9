"""Validate the numerical laboratory against its acceptance checks."""
import math
import time

import numpy as np

from src.config import Config
from src.orbit_solver import (
    census,
    constant_profile,
    energy_for_period,
    integrate_orbit,
    profile,
    translate_profile,
)
from src.period_map import (
    derdzinski_period_sup,
    monotonicity_certificate,
    period,
    period_derivative,
    period_derivative_integral,
)
from src.potential_core import ModelParams, derive_params, normalized_system
from src.ricci_check import conformal_length, harmonic_residual, perturb_profile
from src.yamabe_family import yamabe_census, yamabe_threshold

failures = []


def check(label, ok, detail=""):
    status = "[OK]" if ok else "[ERROR]"
    print(f"{status} {label}" + (f" ({detail})" if detail else ""))
    if not ok:
        failures.append(label)


def section(title):
    print("\n" + "=" * 80)
    print(title)
    print("=" * 80)


config = Config()

section("1. ISOCHRONOUS ORACLE (n = 4)")
start = time.perf_counter()
system = normalized_system(4)
worst = max(abs(period(system, float(c)).T - 2 * math.pi) for c in np.linspace(0.01, 0.45, 20))
check("T(c) = 2 pi for 20 energies", worst < 1e-8, f"max error {worst:.2e}")
print(f"  {time.perf_counter() - start:.2f} s")

section("2. SMALL-AMPLITUDE LIMIT")
for n in (3, 5, 6, 10):
    error = abs(period(normalized_system(n), 1e-10).T - math.pi * math.sqrt(n))
    check(f"n={n}: T(1e-10) = pi sqrt(n)", error < 1e-3, f"error {error:.2e}")

section("3. PERIOD MONOTONICITY")
start = time.perf_counter()
for n in (3, 5, 6, 10):
    system = normalized_system(n)
    energies = np.geomspace(1e-8, 0.99 * system.c_max, 100)
    values = np.diff([period(system, float(c)).T for c in energies])
    if n == 3:
        check("n=3: period strictly decreasing (bounded by 3 pi / 2)", bool(np.all(values < 0)))
    else:
        check(f"n={n}: period strictly increasing", bool(np.all(values > 0)))
system = normalized_system(5)
worst = 0.0
for c in np.linspace(0.03, 0.3, 10):
    fd = period_derivative(system, float(c))
    integral, _ = period_derivative_integral(system, float(c))
    worst = max(worst, abs(integral - fd) / abs(fd))
check("n=5: finite-difference dT/dc matches the integral formula", worst < 1e-4, f"max rel. diff {worst:.2e}")
print(f"  {time.perf_counter() - start:.2f} s")

section("4. CERTIFICATES")
for n in (5, 6, 8, 10):
    report = monotonicity_certificate(n)
    check(f"n={n}: H > 0 and Delta >= 0", report.H_positive and report.Delta_nonnegative)
report = monotonicity_certificate(4)
check("n=4: H vanishes", max(abs(h) for h in report.H_values) < 1e-12)
report = monotonicity_certificate(3)
print(f"  n=3: H_positive={report.H_positive}, min H={report.H_min:.3e}")
print(f"  {report.notes}")

section("5. CENSUS BRACKET (n = 5, R = 16, C = 1)")
start = time.perf_counter()
params = ModelParams(n=5, R=16.0, C=1.0)
T_min = derive_params(params).T_min
bounded = derdzinski_period_sup(5) / derive_params(params).beta
mismatches = []
bracket_misses = 0
families = []
for T in np.arange(1.0, 6.5 * math.pi, 0.1):
    T = float(T)
    result = census(params, T, config)
    low, high = result.attainable_periods
    expected = 1 + sum(1 for j in range(1, int(T / low) + 1) if low < T / j < high)
    if result.count != expected:
        mismatches.append(T)
    if not result.bracket_consistent:
        bracket_misses += 1
    families.extend((T, f) for f in result.families if f.kind == "nonconstant")
check("every family closes", all(f.residuals.get("closure", 1.0) < 1e-8 for _, f in families))
check("j * minimal period = T", all(abs(f.j * f.minimal_period - T) < 1e-8 for T, f in families))
check("count = 1 + #{j : T/j attained}", not mismatches, f"{len(mismatches)} mismatches")
print(f"  bracket k differs from the count at {bracket_misses} lengths")
print(f"  attained minimal periods lie in ({T_min:.6f}, {bounded:.6f}); the bracket k holds only for T < {bounded:.4f}")
print(f"  {time.perf_counter() - start:.2f} s")

section("6. CODAZZI EQUIVALENCE")
sample = families[:: max(1, len(families) // 10)][:10]
worst = max(f.residuals["codazzi"] for _, f in sample)
check("census families are harmonic", worst < 1e-8, f"max residual {worst:.2e}")
beta = derive_params(params).beta
c = energy_for_period(normalized_system(5), 6.6 * beta, config, config.census_cutoff)
base = profile(params, c, 6.6, 1024)
residuals = [harmonic_residual(perturb_profile(base, eps)) for eps in (1e-3, 1e-4, 1e-5)]
ratios = [residuals[0] / residuals[1], residuals[1] / residuals[2]]
check("perturbation residual is linear in eps", all(10 / 3 < r < 30 for r in ratios),
      ", ".join(f"{r:.2f}" for r in ratios))

section("7. PARALLELISM DICHOTOMY")
check("constant families are parallel", all(
    f.parallel == "parallel" for f in census(params, 7.0, config).families if f.kind == "constant"))
check("non-constant families are not parallel", all(f.parallel == "non_parallel" for _, f in families))

section("8. NEAR-HOMOCLINIC PERIODS (n = 5)")
system = normalized_system(5)
values = [period(system, f * system.c_max, config, config.census_cutoff).T for f in (0.9, 0.99, 0.999, 0.9999)]
check("T increasing towards the homoclinic loop", all(b > a for a, b in zip(values, values[1:])))
check("T bounded by 5 pi / 2", values[-1] < 2.5 * math.pi, f"T(0.9999 c0) = {values[-1]:.6f}")

section("9. YAMABE FAMILY")
check("threshold(3) = 2 pi", yamabe_threshold(3) == 2 * math.pi)
check("threshold(6) = pi", yamabe_threshold(6) == math.pi)
check("n=3, T=6: one metric", yamabe_census(3, 6.0, config).count == 1)
result = yamabe_census(3, 7.0, config)
family = result.families[-1]
check("n=3, T=7: two metrics", result.count == 2)
check("family closes and solves the equation",
      family.residuals["closure"] < 1e-8 and family.residuals["yamabe"] < 1e-6,
      f"closure {family.residuals['closure']:.2e}, residual {family.residuals['yamabe']:.2e}")

section("10. SYMPLECTIC ENERGY CONSERVATION")
start = time.perf_counter()
system = normalized_system(5)
coarse = integrate_orbit(system, 0.2, steps_per_period_hint=2048, periods=100)
fine = integrate_orbit(system, 0.2, steps_per_period_hint=4096, periods=100)
check("drift < 1e-9 over 100 periods", fine.energy_drift < 1e-9, f"{fine.energy_drift:.2e}")
order = math.log2(coarse.energy_drift / fine.energy_drift)
check("step halving matches fourth order", 3.0 < order < 5.0, f"observed order {order:.2f}")
print(f"  {time.perf_counter() - start:.2f} s")

section("11. CONFORMAL LENGTH")
alpha = derive_params(params).alpha
value = conformal_length(constant_profile(params, 7.0, 1024))
check("constant profile: T alpha^(-2/n)", abs(value - 7.0 * alpha ** -0.4) < 1e-12 * value)
shift = abs(conformal_length(translate_profile(base, 300)) - conformal_length(base))
check("translation invariance", shift < 1e-10, f"{shift:.2e}")

section("SUMMARY")
if failures:
    print(f"[ERROR] {len(failures)} checks failed:")
    for label in failures:
        print(f"  - {label}")
else:
    print("[OK] All checks passed")
