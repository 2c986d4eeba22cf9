"""
Tests for the pseudo-cylindric (Yamabe) family.
"""

import math

import numpy as np
import pytest

from src.exceptions import ParameterError, PositivityError
from src.period_map import period
from src.yamabe_family import (
    period_is_increasing,
    yamabe_bifurcation_points,
    yamabe_census,
    yamabe_profile,
    yamabe_residual,
    yamabe_system,
    yamabe_threshold,
)


_CENSUS_CACHE = {}


def _census(n: int, T: float):
    """Yamabe census computed once per (n, T)."""
    if (n, T) not in _CENSUS_CACHE:
        _CENSUS_CACHE[(n, T)] = yamabe_census(n, T)
    return _CENSUS_CACHE[(n, T)]


# ============================================================================
# 1. System
# ============================================================================

def test_beta_const_closed_forms():
    """beta = ((n-2)/n)^((n-2)/4)"""
    assert yamabe_system(4).beta_const == pytest.approx(math.sqrt(0.5), rel=1e-15)
    assert yamabe_system(3).beta_const == pytest.approx((1.0 / 3.0) ** 0.25, rel=1e-15)


@pytest.mark.parametrize("n", [3, 4, 5, 6, 10])
def test_center_linearization(n):
    """phi_Y(beta) = 0 and phi_Y'(beta) = n - 2"""
    ys = yamabe_system(n)
    system = ys.underlying
    assert abs(system.phi(ys.beta_const)) < 1e-14
    assert system.dphi(ys.beta_const) == pytest.approx(n - 2, rel=1e-12)
    h = 1e-6
    slope = (system.phi(ys.beta_const + h) - system.phi(ys.beta_const - h)) / (2 * h)
    assert slope == pytest.approx(n - 2, rel=1e-8)


@pytest.mark.parametrize("n", [3, 4, 6])
def test_c_max_is_potential_at_zero(n):
    """The escape energy is G_Y(0)"""
    system = yamabe_system(n).underlying
    assert system.G(0.0) == pytest.approx(system.c_max, rel=1e-13)


def test_integer_exponents():
    """(n+2)/(n-2) is 5, 3 and 2 for n = 3, 4, 6"""
    assert [yamabe_system(n).exponent for n in (3, 4, 6)] == [5.0, 3.0, 2.0]


def test_invalid_dimension():
    """n >= 3"""
    with pytest.raises(ParameterError):
        yamabe_system(2)


# ============================================================================
# 2. Threshold and period map
# ============================================================================

def test_thresholds_exact():
    """2 pi / sqrt(n - 2)"""
    assert yamabe_threshold(3) == 2.0 * math.pi
    assert yamabe_threshold(6) == math.pi
    assert yamabe_threshold(4) == pytest.approx(4.442882938158366)


@pytest.mark.parametrize("n", [3, 4, 6, 10])
def test_small_amplitude_period(n):
    """T(c) tends to the threshold"""
    system = yamabe_system(n).underlying
    assert abs(period(system, 1e-10).T - yamabe_threshold(n)) < 1e-3


@pytest.mark.parametrize("n", [3, 4, 6])
def test_period_increasing(n):
    """The Yamabe period map is increasing, also for n = 4"""
    ys = yamabe_system(n)
    energies = np.geomspace(1e-8, 0.99 * ys.underlying.c_max, 50)
    values = np.array([period(ys.underlying, float(c)).T for c in energies])
    assert np.all(np.diff(values) > 0)
    assert period_is_increasing(ys)


def test_bifurcation_points():
    """2 pi k / sqrt(n - 2)"""
    points = yamabe_bifurcation_points(6, 3)
    assert [p.T_k for p in points] == pytest.approx([math.pi, 2 * math.pi, 3 * math.pi])
    assert points[0].u_k == pytest.approx(yamabe_system(6).beta_const)


# ============================================================================
# 3. Residual
# ============================================================================

def test_residual_constant():
    """u = beta solves the equation"""
    ys = yamabe_system(3)
    t = np.linspace(0.0, 7.0, 257)
    assert yamabe_residual(t, np.full_like(t, ys.beta_const), 3) < 1e-14


def test_residual_perturbed_constant():
    """A perturbation of size 1e-3 gives a residual of order 1e-3"""
    ys = yamabe_system(6)
    t = np.linspace(0.0, 2.0 * math.pi, 1025)
    u = ys.beta_const * (1.0 + 1e-3 * np.sin(t))
    assert 1e-4 < yamabe_residual(t, u, 6) < 1e-2


def test_residual_kernel_mode_second_order():
    """n=3: sin t solves the linearized equation, so the residual is O(eps^2)"""
    ys = yamabe_system(3)
    t = np.linspace(0.0, 2.0 * math.pi, 1025)
    u = ys.beta_const * (1.0 + 1e-3 * np.sin(t))
    assert yamabe_residual(t, u, 3) < 1e-4


def test_residual_rejects_non_positive():
    """u must be positive"""
    t = np.linspace(0.0, 1.0, 9)
    with pytest.raises(PositivityError):
        yamabe_residual(t, np.cos(4 * t), 3)


# ============================================================================
# 4. Census
# ============================================================================

def test_census_below_threshold():
    """n=3, T=6 < 2 pi: only the cylinder"""
    result = _census(3, 6.0)
    assert result.count == 1
    assert result.families[0].residuals["yamabe"] < 1e-12


def test_census_one_branch():
    """n=3, T=7: cylinder plus one pseudo-cylindric family"""
    result = _census(3, 7.0)
    assert result.count == 2
    assert result.bracket_consistent
    family = result.families[1]
    assert family.kind == "nonconstant"
    assert family.j == 1
    assert family.residuals["closure"] < 1e-8
    assert family.residuals["yamabe"] < 1e-6
    assert family.flags == []


def test_census_n6():
    """n=6, pi < 3.5 <= 2 pi: two metrics"""
    assert _census(6, 3.5).count == 2


def test_profile_over_circle():
    """The sampled family is periodic over T and positive"""
    result = _census(3, 7.0)
    prof = yamabe_profile(3, result.families[1].c, 7.0, 512)
    assert np.all(prof.u > 0)
    assert prof.u[0] == pytest.approx(prof.u[-1], abs=1e-8)
    assert prof.closure_distance < 1e-8
