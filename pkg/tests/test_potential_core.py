"""
Tests for model parameters and potential systems.

Expected values are closed forms; no randomness.
"""

import math

import numpy as np
import pytest

from src.exceptions import ParameterError
from src.potential_core import (
    ModelParams,
    PotentialSystem,
    constant_solution_residual,
    derive_params,
    normalized_system,
    physical_energy,
    printed_alpha_forms,
    raw_system,
    validate_dimension,
)


# ============================================================================
# 1. Parameter validation
# ============================================================================

@pytest.mark.parametrize("n", [3, 4, 5, 10, 5.0])
def test_valid_dimension(n):
    """Integers (and integral floats) from 3 upward are accepted"""
    assert validate_dimension(n) == int(n)


@pytest.mark.parametrize("n", [2, 0, -4, 4.5, "5", True, None])
def test_invalid_dimension(n):
    """Dimensions below 3 or non-integers are rejected"""
    with pytest.raises(ParameterError):
        validate_dimension(n)


@pytest.mark.parametrize("R, C", [(0.0, 1.0), (-1.0, 1.0), (16.0, 0.0), (16.0, -2.0), (math.nan, 1.0), (16.0, math.inf)])
def test_invalid_curvature_and_constant(R, C):
    """R and C must be positive and finite"""
    with pytest.raises(ParameterError):
        ModelParams(n=5, R=R, C=C)


def test_parameter_error_is_value_error():
    """ParameterError can be caught as ValueError"""
    with pytest.raises(ValueError):
        ModelParams(n=5, R=16.0, C=1.0, T=-1.0)


def test_params_round_trip_dict():
    """from_dict inverts to_dict"""
    params = ModelParams(n=5, R=16.0, C=1.0, T=7.0)
    assert ModelParams.from_dict(params.to_dict()) == params


# ============================================================================
# 2. Derived constants
# ============================================================================

def test_derive_params_n5():
    """n=5, R=16, C=1: alpha = 4^(5/4), beta = sqrt(5/4), c0 = 1/3, T_min = 2 pi"""
    derived = derive_params(ModelParams(n=5, R=16.0, C=1.0))
    assert derived.alpha == pytest.approx(4.0 ** 1.25, rel=1e-14)
    assert derived.beta == pytest.approx(math.sqrt(1.25), rel=1e-15)
    assert derived.c0 == pytest.approx(1.0 / 3.0, rel=1e-15)
    assert derived.T_min == pytest.approx(2.0 * math.pi, rel=1e-15)


@pytest.mark.parametrize("n, R, C", [(3, 2.0, 0.5), (4, 3.0, 1.0), (5, 16.0, 1.0), (6, 0.1, 7.0), (10, 90.0, 2.5)])
def test_constant_solution_satisfies_ode(n, R, C):
    """The constant solution satisfies the ODE to round-off"""
    params = ModelParams(n=n, R=R, C=C)
    alpha = derive_params(params).alpha
    scale = n * C / 4.0 * alpha
    assert constant_solution_residual(params, alpha) <= 1e-12 * scale


@pytest.mark.parametrize("n, R, C", [(3, 2.0, 0.5), (5, 16.0, 1.0), (8, 7.0, 3.0)])
def test_alpha_closed_form(n, R, C):
    """The verified root equals (R/((n-1)C))^(n/4)"""
    forms = printed_alpha_forms(ModelParams(n=n, R=R, C=C))
    assert forms["verified"] == pytest.approx(forms["closed_form"], rel=1e-13)


def test_printed_forms_disagree_with_root():
    """The printed alternatives are reported but do not solve the ODE in general"""
    params = ModelParams(n=5, R=16.0, C=1.0)
    forms = printed_alpha_forms(params)
    assert constant_solution_residual(params, forms["printed_introduction"]) > 1e-3


def test_raw_system_linearization():
    """phi'(alpha) = C for the physical system"""
    params = ModelParams(n=5, R=16.0, C=1.0)
    system = raw_system(params)
    assert system.dphi(system.center) == pytest.approx(1.0, rel=1e-12)
    assert system.linear_period == pytest.approx(2.0 * math.pi, rel=1e-12)


def test_physical_energy_scaling():
    """Energies scale by alpha^2 beta^2"""
    params = ModelParams(n=5, R=16.0, C=1.0)
    derived = derive_params(params)
    assert physical_energy(params, 0.1) == pytest.approx(0.1 * derived.alpha ** 2 * derived.beta ** 2)
    assert raw_system(params).c_max == pytest.approx(physical_energy(params, derived.c0))


# ============================================================================
# 3. Normalized system
# ============================================================================

@pytest.mark.parametrize("n", [3, 4, 5, 6, 10])
def test_linear_period(n):
    """phi'(1) = 4/n, so the small-amplitude period is pi sqrt(n)"""
    assert normalized_system(n).linear_period == pytest.approx(math.pi * math.sqrt(n), rel=1e-14)


def test_potential_n4_is_quadratic():
    """n=4: G(f) = (f-1)^2 / 2"""
    system = normalized_system(4)
    x = np.array([0.0, 0.25, 0.5, 1.0, 1.7, 3.0])
    assert np.allclose(system.G(x), 0.5 * (x - 1.0) ** 2, rtol=0, atol=1e-14)


@pytest.mark.parametrize("n", [3, 5, 6, 10])
def test_potential_at_zero_is_c_max(n):
    """G(0) = 1/(n-2): the homoclinic loop touches f = 0"""
    system = normalized_system(n)
    assert system.G(0.0) == pytest.approx(system.c_max, rel=1e-14)


@pytest.mark.parametrize("n", [3, 4, 5, 6, 10])
def test_potential_derivative_is_force(n):
    """G'(f) = phi(f) by centered differences on a grid"""
    system = normalized_system(n)
    x = np.linspace(0.2, 3.0, 29)
    step = 1e-5
    slope = (system.G(x + step) - system.G(x - step)) / (2.0 * step)
    assert np.allclose(slope, system.phi(x), rtol=0, atol=1e-8)


@pytest.mark.parametrize("n", [3, 5, 6, 10])
def test_homoclinic_energy_sequence(n):
    """G(10^-k) climbs towards c0 as f approaches 0"""
    system = normalized_system(n)
    gaps = [system.c_max - float(system.G(10.0 ** -k)) for k in range(1, 9)]
    assert all(0 < b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-5


def test_gap_small_delta_accuracy():
    """gap stays accurate for small displacements"""
    system = normalized_system(5)
    delta = 1e-5
    # G(1 + d) = (2/5) d^2 + O(d^3) since phi'(1) = 4/5
    assert system.gap(1.0, delta) == pytest.approx(0.4 * delta ** 2, rel=1e-6)


def test_energy_at_center_is_zero():
    """The center has zero energy and phi vanishes there"""
    system = normalized_system(6)
    assert system.energy(1.0, 0.0) == 0.0
    assert system.phi(1.0) == pytest.approx(0.0, abs=1e-15)


def test_phi_rejects_domain_boundary():
    """phi is only defined for f > 0"""
    with pytest.raises(ParameterError):
        normalized_system(5).phi(0.0)


def test_system_requires_center():
    """A center that is not a zero of phi is rejected"""
    with pytest.raises(ParameterError):
        PotentialSystem(label="bad", linear_coeff=1.0, power_coeff=-1.0, exponent=0.2, center=2.0, c_max=0.3)
