"""Homogeneity exponent beta(d, alpha, Theta) from the principal eigenvalue of A_lambda.

For a lambda-homogeneous function r^lambda f(theta) the fractional Laplacian
restricted to the cap is A_lambda f = Delta_S f + R_lambda f.  The Martin
kernel corresponds to a positive f with A_beta f = 0, so beta is the root of
the Perron eigenvalue mu(lambda) of the discretised A_lambda, which
increases with lambda.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .asymptotics import predicted_beta
from .constants import StableParams
from .errors import (BracketFailure, InvalidParameters, NoPositiveEigenvector, NoSignSeparation,
                     UnsupportedAperture)
from .spherical import (OperatorMatrix, _Assembler, _sph_lap_many, apply_radial, build_cap_grid,
                        cap_profile)

LAMBDA_GAP = 1e-8


@dataclass(frozen=True)
class SolverOptions:
    nodes: int = 128
    grading: float = 1.0
    tol: float = 1e-8
    self_check: bool = True
    barrier: bool = False
    barrier_samples: int = 48

    def __post_init__(self):
        if int(self.nodes) != self.nodes or self.nodes < 4:
            raise InvalidParameters(f"nodes must be an integer >= 4, got {self.nodes}")
        if self.grading < 1.0:
            raise InvalidParameters(f"grading must be >= 1, got {self.grading}")
        if not self.tol > 0:
            raise InvalidParameters("tol must be positive")
        if self.barrier_samples < 4:
            raise InvalidParameters("barrier_samples must be >= 4")


@dataclass
class ExponentResult:
    d: int
    alpha: float
    theta: float
    beta: float
    beta_lower: Optional[float]
    beta_upper: Optional[float]
    residual: float
    nodes: int
    self_convergence: Optional[float]
    predicted: Optional[float]
    grid_certified: bool = False
    diagnostics: dict = field(default_factory=dict)

    @property
    def gap(self) -> float:
        """alpha - beta, the quantity the asymptotic law is stated for."""
        return self.alpha - self.beta

    def as_dict(self) -> dict:
        out = asdict(self)
        out.pop("diagnostics")
        return out


def principal_eigenvalue(matrix) -> tuple[float, np.ndarray]:
    """Perron eigenpair: the eigenvector with the fewest negative entries.

    Ties are broken by the largest real eigenvalue.  The returned vector is
    scaled to max entry 1.
    """
    M = matrix.matrix if isinstance(matrix, OperatorMatrix) else np.asarray(matrix, dtype=float)
    M = np.atleast_2d(M)
    if M.shape == (1, 1):
        return float(M[0, 0]), np.ones(1)
    vals, vecs = np.linalg.eig(M)
    scale = max(1.0, float(np.abs(vals).max()))
    best = None
    for k in np.argsort(-vals.real):
        if abs(vals[k].imag) > 1e-10 * scale:
            continue
        v = vecs[:, k].real
        v = v / v[np.argmax(np.abs(v))]
        neg = int(np.count_nonzero(v < -1e-8))
        if best is None or neg < best[0]:
            best = (neg, float(vals[k].real), v)
        if neg == 0:
            break
    if best is None or best[0] > 0:
        raise NoPositiveEigenvector("no eigenvector is entrywise positive; discretisation failed")
    _, mu, v = best
    return mu, np.maximum(v, 0.0) / v.max()


class _ExponentProblem:
    """mu(lambda) on a fixed grid, with lambda-independent parts cached."""

    def __init__(self, params: StableParams, theta: float, nodes: int, grading: float):
        self.params = params
        self.grid = build_cap_grid(theta, nodes, grading, d=params.d, alpha=params.alpha)
        self.asm = _Assembler(params, self.grid)
        self.evaluations = 0

    def mu(self, lam: float) -> float:
        self.evaluations += 1
        return principal_eigenvalue(self.asm.operator(lam))[0]

    def mu_log_gap(self, s: float) -> float:
        return self.mu(self.params.alpha - math.exp(s))

    def root(self, guess: Optional[float] = None) -> tuple[float, float, float]:
        """Root of mu in lambda, solved in s = log(alpha - lambda).  Returns (beta, mu(beta), mu(0))."""
        a = self.params.alpha
        s_lo, s_hi = math.log(LAMBDA_GAP), math.log(a)
        mu0 = self.mu(0.0)
        if mu0 >= 0:
            raise BracketFailure(f"mu(0) = {mu0:.3e} is not negative")
        lo, hi = s_lo, s_hi
        if guess is not None and 0.0 < guess < a:
            sg = math.log(a - guess)
            a_, b_ = sg - 0.05, sg + 0.05
            fa, fb = self.mu_log_gap(a_), self.mu_log_gap(b_)
            if fa > 0 > fb:
                lo, hi = a_, b_
        if (lo, hi) == (s_lo, s_hi):
            if self.mu_log_gap(s_lo) <= 0:
                raise BracketFailure("mu does not change sign on (0, alpha)")
        s = brentq(self.mu_log_gap, lo, hi, xtol=1e-14, rtol=1e-13, maxiter=200)
        beta = a - math.exp(s)
        return beta, self.mu(beta), mu0


def solve_beta(params: StableParams, theta: float, opts: SolverOptions = SolverOptions()) -> ExponentResult:
    """Compute beta(d, alpha, theta) by the eigenvalue route, optionally with barrier bounds."""
    if not (0.0 < theta < math.pi):
        raise InvalidParameters(f"theta must lie in (0, pi), got {theta}")
    half = None
    guess = None
    if opts.self_check and opts.nodes // 2 >= 4:
        half = _ExponentProblem(params, theta, opts.nodes // 2, opts.grading).root()[0]
        guess = half
    prob = _ExponentProblem(params, theta, opts.nodes, opts.grading)
    beta, mu_b, mu0 = prob.root(guess)
    residual = abs(mu_b) / abs(mu0)
    if residual > opts.tol:
        raise BracketFailure(f"relative eigenvalue residual {residual:.2e} above tolerance {opts.tol:.1e}")
    lo = hi = None
    certified = False
    if opts.barrier:
        lo, hi = barrier_bounds(params, theta, opts)
        certified = True
    op = prob.asm.operator(beta)
    diag = {
        "mu0": mu0,
        "evaluations": prob.evaluations,
        "min_offdiag": op.diagnostics["min_offdiag"],
        "max_pv_error": float(np.max(op.diagnostics["pv_error"])),
    }
    return ExponentResult(
        d=params.d, alpha=params.alpha, theta=float(theta), beta=beta, beta_lower=lo, beta_upper=hi,
        residual=residual, nodes=int(opts.nodes),
        self_convergence=None if half is None else abs(beta - half),
        predicted=predicted_beta(params, theta) if theta < 1.0 else None,
        grid_certified=certified, diagnostics=diag,
    )


def barrier_residuals(params: StableParams, theta: float, lam: float, samples: np.ndarray,
                      spherical_part: Optional[np.ndarray] = None) -> np.ndarray:
    """E(lambda, eta) = Delta_S phi(eta) + R_lambda phi(eta) for the cap barrier phi."""
    phi = cap_profile(params, theta)
    if spherical_part is None:
        spherical_part = np.array([_sph_lap_many(params, [phi], float(e), theta)[0][0] for e in samples])
    radial = np.array([apply_radial(params, phi, float(e), lam) for e in samples])
    return spherical_part + radial


def barrier_samples(theta: float, n: int) -> np.ndarray:
    """Sample angles in the cap, denser toward its edge."""
    s = (np.arange(1, n + 1) - 0.5) / n
    return theta * (1.0 - (1.0 - s) ** 2)


def barrier_bounds(params: StableParams, theta: float,
                   opts: SolverOptions = SolverOptions()) -> tuple[float, float]:
    """Bracket [lambda_lo, lambda_hi] from the sign of E(lambda, .) on sampled angles.

    lambda_hi is the smallest lambda with E >= 0 at every sample, lambda_lo
    the largest with E <= 0 at every sample.  The sign conditions are only
    checked on the samples ("grid-certified"), not on the whole cap.
    """
    if not (0.0 < theta <= math.pi / 3 + 1e-12):
        raise UnsupportedAperture(f"barrier bounds are only built for theta <= pi/3, got {theta}")
    a = params.alpha
    eta = barrier_samples(theta, opts.barrier_samples)
    phi = cap_profile(params, theta)
    sph = np.array([_sph_lap_many(params, [phi], float(e), theta)[0][0] for e in eta])

    def E(s):
        return barrier_residuals(params, theta, a - math.exp(s), eta, sph)

    s_lo, s_hi = math.log(LAMBDA_GAP), math.log(a)
    e_top, e_bot = E(s_lo), E(s_hi)  # lambda near alpha, lambda = 0
    if e_top.min() < 0 or e_bot.max() > 0:
        raise NoSignSeparation("E does not take both signs on (0, alpha)")
    kw = dict(xtol=1e-14, rtol=1e-12, maxiter=200)
    s_up = brentq(lambda s: E(s).min(), s_lo, s_hi, **kw)
    s_dn = brentq(lambda s: E(s).max(), s_lo, s_hi, **kw)
    lam_hi = a - math.exp(s_up)
    lam_lo = a - math.exp(s_dn)
    return min(lam_lo, lam_hi), max(lam_lo, lam_hi)
