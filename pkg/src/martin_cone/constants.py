"""Closed-form constants of the cone problem, built from gamma and beta functions."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, InvalidParameters

# Lanczos approximation, g = 7, n = 9 (about 15 significant digits for x > 0).
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma(x: float) -> float:
    """Euler gamma function for real x (poles at non-positive integers)."""
    if x <= 0.0 and x == math.floor(x):
        raise DomainError(f"gamma has a pole at {x}")
    if x < 0.5:
        # reflection formula
        return math.pi / (math.sin(math.pi * x) * gamma(1.0 - x))
    x -= 1.0
    acc = _LANCZOS_COEF[0]
    for k in range(1, len(_LANCZOS_COEF)):
        acc += _LANCZOS_COEF[k] / (x + k)
    t = x + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (x + 0.5) * math.exp(-t) * acc


def beta_fn(a: float, b: float) -> float:
    return gamma(a) * gamma(b) / gamma(a + b)


@dataclass(frozen=True)
class StableParams:
    """Dimension ``d`` and stability index ``alpha`` of the fractional Laplacian."""

    d: int
    alpha: float

    def __post_init__(self):
        if isinstance(self.d, bool) or int(self.d) != self.d or self.d < 2:
            raise InvalidParameters(f"d must be an integer >= 2, got {self.d!r}")
        if not (0.0 < self.alpha < 2.0):
            raise InvalidParameters(f"alpha must lie in (0, 2), got {self.alpha!r}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "alpha", float(self.alpha))


def sphere_area(n: int) -> float:
    """sigma(S^{n-1}) = 2 pi^{n/2} / Gamma(n/2); the area of the unit sphere in R^n."""
    return 2.0 * math.pi ** (n / 2.0) / gamma(n / 2.0)


def frac_lap_normalizer(d: int, alpha: float) -> float:
    """A_d^alpha, the constant in front of the singular integral."""
    return (alpha * 2.0 ** (alpha - 1.0) * math.pi ** (-d / 2.0)
            * gamma((d + alpha) / 2.0) / gamma(1.0 - alpha / 2.0))


def ball_exit_constant(d: int, alpha: float) -> float:
    """C_{d,alpha}: the expected exit time from the unit ball is C (1-|x|^2)^{alpha/2}."""
    return gamma(d / 2.0) / (2.0 ** alpha * gamma((d + alpha) / 2.0) * gamma(1.0 + alpha / 2.0))


@dataclass(frozen=True)
class ConstantSet:
    A_norm: float
    C_ball_d: float
    C_ball_dm1: float
    B_martin: float
    C_tilde: float
    omega_sphere_d: float

    def as_dict(self) -> dict:
        return {
            "A_norm": self.A_norm,
            "C_ball_d": self.C_ball_d,
            "C_ball_dm1": self.C_ball_dm1,
            "B_martin": self.B_martin,
            "C_tilde": self.C_tilde,
            "omega_sphere_d": self.omega_sphere_d,
        }


def martin_constant(d: int, alpha: float) -> float:
    """Leading coefficient of alpha - beta in powers of the aperture."""
    return (gamma((d + alpha) / 2.0) / (math.pi ** 1.5 * gamma((d - 1 + alpha) / 2.0))
            * math.sin(math.pi * alpha / 2.0) * beta_fn(1.0 + alpha / 2.0, (d - 1) / 2.0))


def eval_constants(params: StableParams) -> ConstantSet:
    d, a = params.d, params.alpha
    c_dm1 = ball_exit_constant(d - 1, a)
    c_tilde = 0.5 * sphere_area(d - 1) * c_dm1 * beta_fn(1.0 + a / 2.0, (d - 1) / 2.0)
    return ConstantSet(
        A_norm=frac_lap_normalizer(d, a),
        C_ball_d=ball_exit_constant(d, a),
        C_ball_dm1=c_dm1,
        B_martin=martin_constant(d, a),
        C_tilde=c_tilde,
        omega_sphere_d=sphere_area(d),
    )


def omega_rate(theta: float, alpha: float) -> float:
    """Relative size of the correction term at aperture theta (natural log)."""
    if not (0.0 < theta < 1.0):
        raise DomainError(f"omega_rate needs theta in (0, 1), got {theta!r}")
    if not (0.0 < alpha < 2.0):
        raise InvalidParameters(f"alpha must lie in (0, 2), got {alpha!r}")
    if alpha < 1.0:
        return theta ** alpha
    if alpha == 1.0:
        return theta * abs(math.log(theta))
    return theta


def slit_constant(d: int) -> float:
    """Closed form of B_{d,1}."""
    if int(d) != d or d < 2:
        raise InvalidParameters(f"d must be an integer >= 2, got {d!r}")
    return (1.0 / (2.0 * math.pi)) * ((d - 1) / d) * gamma((d - 1) / 2.0) ** 2 / gamma(d / 2.0) ** 2
