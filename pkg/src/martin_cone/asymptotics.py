"""Leading-order asymptotics of beta for narrow cones, power-law fits and the slit check."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .constants import StableParams, martin_constant
from .errors import DegenerateFit, DomainError, InvalidParameters


@dataclass
class SweepRecord:
    theta: float
    beta: float
    beta_lower: Optional[float]
    beta_upper: Optional[float]
    nodes: int
    residual: float
    predicted: Optional[float]
    self_convergence: Optional[float] = None


def predicted_beta(params: StableParams, theta: float) -> float:
    """alpha - B_{d,alpha} theta^{d-1+alpha}, the leading term only."""
    if not (0.0 < theta < 1.0):
        raise DomainError(f"predicted_beta needs theta in (0, 1), got {theta}")
    d, a = params.d, params.alpha
    return a - martin_constant(d, a) * theta ** (d - 1 + a)


@dataclass
class PowerFit:
    slope: float
    constant: float
    n_points: int


NOISE_FACTOR = 100.0


def fit_power_law(records: Sequence[SweepRecord], alpha: float) -> PowerFit:
    """Least-squares fit of log(alpha - beta) = log(constant) + slope log(theta).

    Records whose gap alpha - beta is not at least NOISE_FACTOR times their
    self-convergence (when known) are dropped before fitting.
    """
    if any(alpha - r.beta <= 0 for r in records):
        raise DegenerateFit("alpha - beta must be positive for every record")
    records = [r for r in records
               if r.self_convergence is None or alpha - r.beta > NOISE_FACTOR * r.self_convergence]
    if len(records) < 4:
        raise InvalidParameters("need at least 4 records above the noise level")
    th = np.array([r.theta for r in records], dtype=float)
    gap = alpha - np.array([r.beta for r in records], dtype=float)
    if np.unique(th).size != th.size:
        raise InvalidParameters("thetas must be distinct")
    slope, icpt = np.polyfit(np.log(th), np.log(gap), 1)
    return PowerFit(float(slope), float(math.exp(icpt)), th.size)


@dataclass
class SlitReport:
    thetas: list
    betas: list
    reference: list
    ratios: list
    self_convergence: list


def slit_reference(theta: float) -> float:
    """1 - theta^2/4."""
    return 1.0 - 0.25 * theta * theta


def slit_check(theta_list: Sequence[float], nodes: int = 128) -> SlitReport:
    """Compare beta(2, 1, theta) with 1 - theta^2/4 through the ratio (1 - beta)/(theta^2/4)."""
    from .solver import SolverOptions, solve_beta

    params = StableParams(2, 1.0)
    out = SlitReport([], [], [], [], [])
    for th in theta_list:
        if not (0.0 < th < 0.5):
            raise DomainError(f"slit_check needs theta in (0, 0.5), got {th}")
        res = solve_beta(params, th, SolverOptions(nodes=nodes))
        out.thetas.append(float(th))
        out.betas.append(res.beta)
        out.reference.append(slit_reference(th))
        out.ratios.append((1.0 - res.beta) / (0.25 * th * th))
        out.self_convergence.append(res.self_convergence)
    return out
