"""
Tests for the Ricci derivative fields, the Codazzi identity and the
parallelism verdict along sampled warping functions.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from src.config import Config
from src.exceptions import ParameterError, PositivityError
from src.orbit_solver import census, constant_profile, energy_for_period, profile
from src.potential_core import ModelParams, derive_params, normalized_system
from src.ricci_check import (
    SolutionProfile,
    codazzi_tensor_fields,
    codazzi_trace,
    conformal_length,
    fiber_ricci_factor,
    harmonic_residual,
    ode_residual,
    parallelism_pair,
    parallelism_test,
    perturb_profile,
    profile_from_samples,
    psi_from_profile,
    ricci_derivatives,
    spectral_derivatives,
    validate_profile,
)


PARAMS = ModelParams(n=5, R=16.0, C=1.0)
T = 6.6

_PROFILE_CACHE = {}
_CENSUS_CACHE = {}


def _solved_profile(samples: int = 1024) -> SolutionProfile:
    """j=1 family for n=5, R=16, C=1, T=6.6, computed once per sample count."""
    if samples not in _PROFILE_CACHE:
        beta = derive_params(PARAMS).beta
        config = Config()
        c = energy_for_period(normalized_system(5), T * beta, config, config.census_cutoff)
        _PROFILE_CACHE[samples] = profile(PARAMS, c, T, samples)
    return _PROFILE_CACHE[samples]


def _census(length: float):
    """Census for n=5, R=16, C=1 at the default resolution, computed once per length."""
    if length not in _CENSUS_CACHE:
        _CENSUS_CACHE[length] = census(PARAMS, length)
    return _CENSUS_CACHE[length]


# ============================================================================
# 1. Constant profiles
# ============================================================================

def test_constant_profile_parallel():
    """h = alpha: every field of nabla r vanishes"""
    verdict = parallelism_test(constant_profile(PARAMS, T, 256))
    assert verdict.parallel
    assert verdict.sup_norm < 1e-12


def test_constant_profile_ode_residual():
    """The constant solution solves the ODE"""
    residual = ode_residual(constant_profile(PARAMS, T, 256))
    assert residual.closed < 1e-12
    assert residual.finite_difference < 1e-12


def test_constant_conformal_length():
    """int dt / h^(2/n) = T alpha^(-2/n)"""
    alpha = derive_params(PARAMS).alpha
    assert conformal_length(constant_profile(PARAMS, T, 256)) == pytest.approx(T * alpha ** (-0.4), rel=1e-12)


def test_conformal_length_matches_adaptive_quadrature():
    """n=4, h = 1 + 0.5 cos t over 2 pi, against QUADPACK and at doubled resolution"""
    params = ModelParams(n=4, R=3.0, C=1.0)

    def sampled(count):
        t = np.linspace(0.0, 2.0 * math.pi, count + 1)
        return conformal_length(profile_from_samples(t, 1.0 + 0.5 * np.cos(t), params))

    expected, _ = quad(lambda s: (1.0 + 0.5 * math.cos(s)) ** -0.5, 0.0, 2.0 * math.pi, epsabs=1e-14, epsrel=1e-13)
    assert abs(sampled(256) - expected) < 1e-10
    assert abs(sampled(512) - sampled(256)) < 1e-10


def test_parallelism_pair_constant():
    """For constant q the curvature expression reduces to 2R"""
    pair = parallelism_pair(constant_profile(PARAMS, T, 64))
    assert pair["third_order"] == 0.0
    assert pair["curvature"] == pytest.approx(32.0)


def test_fiber_ricci_factor():
    """r0 = R/(n-1) g0"""
    assert fiber_ricci_factor(PARAMS) == 4.0


# ============================================================================
# 2. Solved families
# ============================================================================

def test_family_is_harmonic_not_parallel():
    """A non-constant solution has harmonic curvature and non-parallel Ricci tensor"""
    prof = _solved_profile()
    assert harmonic_residual(prof) < 1e-8
    verdict = parallelism_test(prof)
    assert verdict.verdict == "non_parallel"
    assert verdict.sup_norm > 1e-3


def test_ricci_fields_closed_form_n4():
    """n=4, R=3, C=1, h = 1 + 0.5 cos t: fields match analytically differentiated q"""
    params = ModelParams(n=4, R=3.0, C=1.0)
    prof = profile(params, 0.125, 2.0 * math.pi, 512)
    t = prof.t_grid
    h = 1.0 + 0.5 * np.cos(t)
    h1, h2, h3 = -0.5 * np.sin(t), -0.5 * np.cos(t), 0.5 * np.sin(t)
    q1 = h1 / h
    q2 = h2 / h - q1 ** 2
    q3 = h3 / h - 3.0 * h1 * h2 / h ** 2 + 2.0 * q1 ** 3
    fields_ = ricci_derivatives(prof)
    assert np.max(np.abs(fields_.rho_000 + 1.5 * (q3 + q1 * q2))) < 1e-8
    assert np.max(np.abs(fields_.rho_0ij_scalar + q1 + 0.5 * h * (q3 + 3.0 * q1 * q2))) < 1e-8
    assert np.max(np.abs(fields_.rho_i0j_scalar + 0.5 * q1 + 0.5 * h * q1 * q2)) < 1e-8
    assert fields_.sup_norms["rho_000"] > 0.1


def test_family_ode_residual():
    """Closed-form h'' is exact; finite differences are second order"""
    coarse = ode_residual(_solved_profile(512))
    fine = ode_residual(_solved_profile(1024))
    assert fine.closed < 1e-10
    assert fine.finite_difference < 1e-3
    assert 2.5 < coarse.finite_difference / fine.finite_difference < 5.5


def test_family_ode_residual_at_default_resolution():
    """4096 samples: second differences below 1e-5, the five-point stencil below 1e-6"""
    residual = ode_residual(_solved_profile(4096))
    assert residual.closed < 1e-10
    assert residual.finite_difference < 1e-5
    assert residual.fourth_order < 1e-6
    assert residual.fourth_order < residual.finite_difference


def test_mixed_components_documented():
    """The fields dataclass exposes all sup norms"""
    fields_ = ricci_derivatives(_solved_profile())
    assert set(fields_.sup_norms) == {"rho_000", "rho_0ij", "rho_i0j", "codazzi"}
    assert fields_.rho_000.shape == _solved_profile().t_grid.shape


@pytest.mark.parametrize("eps", [1e-3, 1e-4, 1e-5])
def test_perturbation_breaks_codazzi_linearly(eps):
    """Multiplicative perturbations give a residual proportional to eps"""
    base = _solved_profile()
    residual = harmonic_residual(perturb_profile(base, eps))
    reference = harmonic_residual(perturb_profile(base, 1e-3))
    ratio = residual / (reference * eps / 1e-3)
    assert 1.0 / 3.0 < ratio < 3.0


def test_perturbed_constant_not_harmonic():
    """Perturbing the constant solution breaks the identity at order eps"""
    residual = harmonic_residual(perturb_profile(constant_profile(PARAMS, T, 256), 1e-4))
    assert 1e-7 < residual < 1e-2


@pytest.mark.slow
@pytest.mark.parametrize("length", [6.4, 6.5, 6.6])
def test_census_families_harmonic_iff_ode(length):
    """Resolved census families pass both residuals; a perturbation fails both"""
    result = _census(length)
    family = [f for f in result.families if f.kind == "nonconstant"]
    assert [f.j for f in family] == [1]
    residuals = family[0].residuals
    assert residuals["codazzi"] < 1e-8
    assert residuals["ode_finite_difference"] < 1e-5
    assert residuals["ode_fourth_order"] < 1e-6

    perturbed = perturb_profile(profile(PARAMS, family[0].c, length, 4096), 1e-3)
    assert harmonic_residual(perturbed) > 1e-8
    assert ode_residual(perturbed).finite_difference > 1e-5


@pytest.mark.slow
def test_difference_residual_grows_near_homoclinic_loop():
    """T = 7: h dips to about 2e-4, the Codazzi residual stays at round-off while second differences miss 1e-5"""
    result = _census(7.0)
    family = [f for f in result.families if f.kind == "nonconstant"][0]
    assert family.residuals["codazzi"] < 1e-8
    assert family.residuals["ode_finite_difference"] > 1e-5


# ============================================================================
# 3. Spectral reconstruction
# ============================================================================

def test_spectral_derivatives_of_sine():
    """d/dt sin(t) = cos(t) on a periodic grid"""
    t = np.linspace(0.0, 2.0 * math.pi, 64, endpoint=False)
    derivatives = spectral_derivatives(np.sin(t), 2.0 * math.pi)
    assert np.allclose(derivatives[1], np.cos(t), atol=1e-12)
    assert np.allclose(derivatives[2], -np.sin(t), atol=1e-12)
    assert np.allclose(derivatives[3], -np.cos(t), atol=1e-11)


def test_profile_from_samples_matches_solution():
    """Spectral derivatives of sampled h agree with the ODE-closed chain"""
    prof = _solved_profile()
    rebuilt = profile_from_samples(prof.t_grid, prof.h, PARAMS)
    scale = np.max(np.abs(prof.h1))
    assert np.max(np.abs(rebuilt.h1 - prof.h1)) < 1e-8 * scale
    assert harmonic_residual(rebuilt) < 1e-6
    assert parallelism_test(rebuilt).verdict == "non_parallel"


def test_profile_from_samples_rejects_short_input():
    """At least 8 rows"""
    with pytest.raises(ParameterError):
        profile_from_samples([0.0, 1.0, 2.0], [1.0, 1.0, 1.0], PARAMS)


# ============================================================================
# 4. Validation
# ============================================================================

def test_non_positive_profile_rejected():
    """h must be positive"""
    t = np.linspace(0.0, 1.0, 9)
    h = np.ones_like(t)
    h[3] = -1.0
    zero = np.zeros_like(t)
    with pytest.raises(PositivityError):
        SolutionProfile.from_h_chain(t, h, zero, zero, zero, PARAMS)


def test_non_uniform_grid_rejected():
    """The grid must be uniform"""
    t = np.array([0.0, 0.1, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 1.0])
    h = np.full_like(t, 2.0)
    zero = np.zeros_like(t)
    with pytest.raises(ParameterError):
        validate_profile(SolutionProfile.from_h_chain(t, h, zero, zero, zero, PARAMS))


def test_non_periodic_profile_rejected():
    """h(0) and h(T) must agree"""
    t = np.linspace(0.0, 1.0, 9)
    h = 2.0 + t
    one = np.ones_like(t)
    zero = np.zeros_like(t)
    with pytest.raises(ParameterError):
        validate_profile(SolutionProfile.from_h_chain(t, h, one, zero, zero, PARAMS))


# ============================================================================
# 5. Codazzi tensors
# ============================================================================

def test_codazzi_trace_constant():
    """lambda + (n-1) mu equals the trace constant"""
    psi = psi_from_profile(_solved_profile(256))
    fields_ = codazzi_tensor_fields(psi, 2.5, 5)
    assert np.allclose(fields_.trace, 2.5, rtol=1e-13)
    assert fields_.distinct
    assert np.allclose(codazzi_trace(fields_.lam, fields_.mu, 5), fields_.trace)


def test_codazzi_zero_trace_rejected():
    """A zero trace makes the eigenvalues coincide"""
    with pytest.raises(ParameterError):
        codazzi_tensor_fields([0.0, 0.1], 0.0, 5)
