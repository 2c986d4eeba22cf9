"""
Potential systems x'' + phi(x) = 0 for the Derdzinski warping equation.

The physical equation for the warping function h on the circle is

    h'' - (nR / (4(n-1))) h^(1-4/n) = -(n/4) C h

and the substitution h(t) = alpha * f(beta * t) turns it into the
normalized form f'' - f^(1-4/n) + f = 0. Both are instances of
PotentialSystem, a restoring force made of a linear and a power term.
"""

from dataclasses import dataclass, asdict
from typing import Optional, Union
import logging
import math

import numpy as np
from scipy.optimize import brentq

from src.exceptions import ParameterError, BracketError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def validate_dimension(n) -> int:
    """Return n as int, raising ParameterError unless it is an integer >= 3."""
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
        if isinstance(n, float) and n.is_integer():
            n = int(n)
        else:
            raise ParameterError(f"dimension n must be an integer, got {n!r}")
    n = int(n)
    if n < 3:
        raise ParameterError(f"dimension n must be at least 3, got {n}")
    return n


@dataclass(frozen=True)
class ModelParams:
    """
    Geometric inputs of a warped product S^1(T) x N.

    Attributes:
        n: Dimension of the total space (the fiber N has dimension n-1).
        R: Scalar curvature of the Einstein fiber (> 0).
        C: Constant of the warping ODE (> 0).
        T: Circle length, carried where needed.
    """
    n: int
    R: float
    C: float
    T: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "n", validate_dimension(self.n))
        if not (math.isfinite(self.R) and self.R > 0):
            raise ParameterError(f"fiber scalar curvature R must be positive, got {self.R}")
        if not (math.isfinite(self.C) and self.C > 0):
            raise ParameterError(f"constant C must be positive, got {self.C}")
        if self.T is not None and not (math.isfinite(self.T) and self.T > 0):
            raise ParameterError(f"circle length T must be positive, got {self.T}")

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        """Create ModelParams from a dictionary."""
        return cls(n=data["n"], R=data["R"], C=data["C"], T=data.get("T"))

    def to_dict(self) -> dict:
        """Convert ModelParams to dictionary."""
        return asdict(self)

    @property
    def ode_coefficient(self) -> float:
        """The factor nR / (4(n-1)) in front of h^(1-4/n)."""
        return self.n * self.R / (4.0 * (self.n - 1))


@dataclass(frozen=True)
class DerivedParams:
    """
    Constants derived from ModelParams.

    Attributes:
        alpha: Value of the constant solution h = alpha.
        beta: Time rescaling factor sqrt(nC/4).
        c0: Homoclinic energy 1/(n-2) of the normalized system.
        T_min: Infimum 2*pi/sqrt(C) of the small-amplitude periods in physical time.
    """
    alpha: float
    beta: float
    c0: float
    T_min: float

    def to_dict(self) -> dict:
        """Convert DerivedParams to dictionary."""
        return asdict(self)


@dataclass(frozen=True)
class PotentialSystem:
    """
    Planar conservative system x'' + phi(x) = 0 with

        phi(x) = linear_coeff * x + power_coeff * x^exponent

    on the open domain (domain_low, +inf). The potential G is the
    antiderivative of phi normalized so that G(center) = 0; it decreases on
    (domain_low, center), increases to the right, and the closed orbits are
    the energy levels 0 < c < c_max.
    """
    label: str
    linear_coeff: float
    power_coeff: float
    exponent: float
    center: float
    c_max: float
    domain_low: float = 0.0

    def __post_init__(self):
        if self.exponent <= -1.0:
            raise ParameterError(f"exponent must exceed -1, got {self.exponent}")
        if not self.center > self.domain_low:
            raise ParameterError(f"center {self.center} must lie inside the domain")
        residual = abs(self._phi(self.center))
        scale = abs(self.linear_coeff * self.center) + abs(self.power_coeff * self.center ** self.exponent)
        if residual > 1e-12 * max(scale, 1.0):
            raise ParameterError(f"phi does not vanish at center {self.center} (residual {residual:.3e})")
        if not self.dphi(self.center) > 0:
            raise ParameterError(f"center {self.center} is not a center: phi'(center) <= 0")
        if not self.c_max > 0:
            raise ParameterError(f"c_max must be positive, got {self.c_max}")

    def _phi(self, x: ArrayLike) -> ArrayLike:
        return self.linear_coeff * x + self.power_coeff * np.power(x, self.exponent)

    def _check_domain(self, x: ArrayLike, closed: bool = False) -> None:
        low = np.min(x)
        if low < self.domain_low or (not closed and low <= self.domain_low):
            raise ParameterError(
                f"{self.label}: evaluation at x = {low} outside the domain ({self.domain_low}, inf)",
                reason="outside_domain",
            )

    def phi(self, x: ArrayLike) -> ArrayLike:
        """Restoring force."""
        self._check_domain(x)
        return self._phi(x)

    def dphi(self, x: ArrayLike) -> ArrayLike:
        """Derivative of the restoring force."""
        self._check_domain(x)
        return self.linear_coeff + self.power_coeff * self.exponent * np.power(x, self.exponent - 1.0)

    def gap(self, x0: ArrayLike, delta: ArrayLike) -> ArrayLike:
        """
        G(x0 + delta) - G(x0), evaluated without cancellation for small delta.

        x0 must be strictly positive; x0 + delta may reach domain_low = 0.
        """
        p = self.exponent + 1.0
        with np.errstate(divide="ignore"):
            power_part = np.power(x0, p) * np.expm1(p * np.log1p(delta / x0))
        return 0.5 * self.linear_coeff * delta * (2.0 * x0 + delta) + self.power_coeff / p * power_part

    def G(self, x: ArrayLike) -> ArrayLike:
        """Potential, zero at the center. Defined on the closed domain."""
        self._check_domain(x, closed=True)
        return self.gap(self.center, np.asarray(x, dtype=float) - self.center)

    def energy(self, x: ArrayLike, v: ArrayLike) -> ArrayLike:
        """Conserved quantity v^2/2 + G(x)."""
        return 0.5 * np.square(v) + self.G(x)

    @property
    def linear_period(self) -> float:
        """Small-amplitude period 2*pi/sqrt(phi'(center))."""
        return 2.0 * math.pi / math.sqrt(float(self.dphi(self.center)))


def normalized_system(n: int) -> PotentialSystem:
    """
    The normalized Derdzinski system f'' + f - f^(1-4/n) = 0.

    G(f) = f^2/2 - (n/(2(n-2))) f^(2(n-2)/n) + 1/(n-2), c_max = 1/(n-2).
    For n = 4 the force is f - 1 and the system is a harmonic oscillator.
    """
    n = validate_dimension(n)
    return PotentialSystem(
        label=f"derdzinski-normalized(n={n})",
        linear_coeff=1.0,
        power_coeff=-1.0,
        exponent=1.0 - 4.0 / n,
        center=1.0,
        c_max=1.0 / (n - 2),
    )


def _solve_constant_solution(params: ModelParams) -> float:
    """Positive root of (nR/(4(n-1))) x^(1-4/n) = (n/4) C x by bracketed root-finding."""
    k = params.ode_coefficient
    e = 1.0 - 4.0 / params.n

    def force(x: float) -> float:
        # log form keeps the bracket expansion well scaled
        return math.log(params.n * params.C / 4.0) + math.log(x) - math.log(k) - e * math.log(x)

    lo, hi = 1.0, 1.0
    for _ in range(2000):
        if force(lo) < 0:
            break
        lo *= 0.5
    for _ in range(2000):
        if force(hi) > 0:
            break
        hi *= 2.0
    if not (force(lo) < 0 < force(hi)):
        raise BracketError(f"could not bracket the constant solution for {params}")
    alpha = brentq(force, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    logger.debug("constant solution alpha=%r bracketed in [%r, %r]", alpha, lo, hi)
    return alpha


def derive_params(params: ModelParams) -> DerivedParams:
    """
    Derive alpha, beta, c0 and T_min.

    alpha is the positive root of the constant-solution identity, which
    equals (R/((n-1)C))^(n/4).

    Raises:
        ParameterError: If n < 3, R <= 0 or C <= 0.
    """
    if not isinstance(params, ModelParams):
        raise ParameterError(f"expected ModelParams, got {type(params).__name__}")
    alpha = _solve_constant_solution(params)
    beta = math.sqrt(params.n * params.C / 4.0)
    return DerivedParams(
        alpha=alpha,
        beta=beta,
        c0=1.0 / (params.n - 2),
        T_min=2.0 * math.pi / math.sqrt(params.C),
    )


def constant_solution_residual(params: ModelParams, h: float) -> float:
    """|h'' - (nR/(4(n-1))) h^(1-4/n) + (n/4) C h| for the constant function h."""
    return abs(-params.ode_coefficient * h ** (1.0 - 4.0 / params.n) + params.n * params.C / 4.0 * h)


def printed_alpha_forms(params: ModelParams) -> dict:
    """
    The verified constant solution next to the two closed forms found in print.

    Only "verified" satisfies the constant-solution identity in general;
    the other two are reported for diagnostics.
    """
    n, R, C = params.n, params.R, params.C
    return {
        "verified": derive_params(params).alpha,
        "closed_form": (R / ((n - 1) * C)) ** (n / 4.0),
        "printed_introduction": (R / (4.0 * (n - 1) * C)) ** (4.0 / n),
        "printed_bifurcation": ((n - 1) * C / (n * R)) ** (-n / 4.0),
    }


def raw_system(params: ModelParams) -> PotentialSystem:
    """
    The physical-variable system for h, centered at alpha.

    phi(h) = (n/4) C h - (nR/(4(n-1))) h^(1-4/n). Orbits map to the
    normalized ones through h(t) = alpha f(beta t): energies scale by
    alpha^2 beta^2 and periods by 1/beta. phi'(alpha) = C.
    """
    derived = derive_params(params)
    scale = derived.alpha ** 2 * derived.beta ** 2
    return PotentialSystem(
        label=f"derdzinski-raw(n={params.n}, R={params.R}, C={params.C})",
        linear_coeff=params.n * params.C / 4.0,
        power_coeff=-params.ode_coefficient,
        exponent=1.0 - 4.0 / params.n,
        center=derived.alpha,
        c_max=scale * derived.c0,
    )


def physical_energy(params: ModelParams, c_normalized: float) -> float:
    """Energy of the raw system corresponding to a normalized energy."""
    derived = derive_params(params)
    return derived.alpha ** 2 * derived.beta ** 2 * c_normalized
