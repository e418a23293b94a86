"""The radial kernel u_lambda(t), its lambda-difference, and their azimuthal reductions.

For unit vectors theta, eta with t = <theta, eta>,

    u_lambda(t) = int_0^1 r^{-1} (r^{d+lambda} + r^{alpha-lambda}) (r^2 - 2 r t + 1)^{-(d+alpha)/2} dr,

and the difference u_lambda - u_0 has the nonnegative integrand
(1 - r^lambda)(r^{alpha-lambda-1} - r^{d-1}) (r^2 - 2 r t + 1)^{-(d+alpha)/2}.
The constant part of both integrands (the value of the last factor at
r = 0) is integrated in closed form so the 1/(alpha - lambda) blow-up is exact.

Assembly of the spherical operators needs the kernels at ~10^6 arguments, so
:class:`KernelTable` tabulates them once per (d, alpha, lambda) as a cubic
spline in log s, s = |theta - eta| = sqrt(2 (1 - t)), after removing the
leading power of s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from .constants import StableParams, sphere_area
from .errors import InvalidParameters, SingularArgument
from .quadrature import adaptive_quad, gauss_legendre, graded_reference

T_CUTOFF = 1.0 - 1e-12


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_subdivisions: int = 2000

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise InvalidParameters("quadrature tolerances must be positive")
        if self.max_subdivisions < 16:
            raise InvalidParameters("max_subdivisions must be >= 16")


@dataclass(frozen=True)
class KernelPoint:
    t: float
    lam: float

    def check(self, params: StableParams):
        if not (-1.0 <= self.t):
            raise InvalidParameters(f"t must be >= -1, got {self.t}")
        if self.t >= T_CUTOFF:
            raise SingularArgument(f"u_lambda(t) is infinite at t = 1 (got t = {self.t!r})")
        if not (-params.d < self.lam < params.alpha):
            raise InvalidParameters(
                f"lambda must lie in (-d, alpha) = ({-params.d}, {params.alpha}), got {self.lam}")


def _log_g(r, t):
    # log(r^2 - 2 r t + 1) without cancellation near r = 0
    a = r * (r - 2.0 * t)
    g = (r - t) ** 2 + (1.0 - t) * (1.0 + t)
    small = np.abs(a) < 0.5
    return np.where(small, np.log1p(np.where(small, a, 0.0)), np.log(np.where(small, 1.0, g)))


def _initial_edges(t: float) -> np.ndarray:
    s = math.sqrt(2.0 * (1.0 - t))
    edges = [0.0, 1.0, 0.5]
    edges += [10.0 ** -k for k in range(1, 9)]
    k = 0
    while s * 4.0 ** k < 0.5:
        edges.append(1.0 - s * 4.0 ** k)
        k += 1
    edges.append(1.0 - 0.25 * s)
    # a bump at r = t below the finest fixed edge is already resolved there
    if 1e-8 < t < 1.0:
        edges.append(t)
    return np.unique(np.clip(edges, 0.0, 1.0))


def u_kernel(params: StableParams, point: KernelPoint, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """u_lambda(t) by adaptive Gauss-Kronrod on the folded [0, 1] form."""
    point.check(params)
    d, a = params.d, params.alpha
    lam, t = point.lam, point.t
    p = 0.5 * (d + a)

    def integrand(r):
        fm1 = np.expm1(-p * _log_g(r, t))
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.exp((d + lam - 1.0) * np.log(r)) + np.exp((a - lam - 1.0) * np.log(r))
        return np.where(r > 0, w * fm1, 0.0)

    val, _ = adaptive_quad(integrand, _initial_edges(t), rtol=quad.rel_tol, atol=quad.abs_tol,
                           max_panels=quad.max_subdivisions)
    return 1.0 / (d + lam) + 1.0 / (a - lam) + val


def u_diff(params: StableParams, point: KernelPoint, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """u_lambda(t) - u_0(t) from its own (nonnegative) integrand, for 0 <= lambda < alpha."""
    point.check(params)
    d, a = params.d, params.alpha
    lam, t = point.lam, point.t
    if lam < 0.0:
        raise InvalidParameters("u_diff needs 0 <= lambda < alpha")
    if lam == 0.0:
        return 0.0
    tau = a - lam
    p = 0.5 * (d + a)
    # 1/tau - 1/alpha - 1/d + 1/(d + lambda) without cancellation at small lambda
    base = lam / (a * tau) - lam / (d * (d + lam))

    def integrand(r):
        fm1 = np.expm1(-p * _log_g(r, t))
        with np.errstate(divide="ignore", invalid="ignore"):
            lr = np.log(r)
            w = -np.expm1(lam * lr) * (np.exp((tau - 1.0) * lr) - np.exp((d - 1.0) * lr))
        return np.where(r > 0, w * fm1, 0.0)

    val, _ = adaptive_quad(integrand, _initial_edges(t), rtol=quad.rel_tol,
                           atol=quad.abs_tol * max(1.0, base), max_panels=quad.max_subdivisions)
    return base + val


# ---------------------------------------------------------------- vectorised fixed rules

@lru_cache(maxsize=None)
def _near_rule():
    # [0, 1/2]: graded toward r = 0
    return graded_reference(left=True, right=False, levels=14, sigma=0.25, order=10, middle=2)


_V_PANELS = 30


@lru_cache(maxsize=None)
def _far_rule():
    x, w = gauss_legendre(10)
    k = np.arange(_V_PANELS)
    nodes = ((k[:, None] + x[None, :]) / _V_PANELS).ravel()
    weights = np.repeat(np.full(_V_PANELS, 1.0 / _V_PANELS), x.size) * np.tile(w, _V_PANELS)
    return nodes, weights


def kernel_values(params: StableParams, s, lam: float = 0.0, diff: bool = False) -> np.ndarray:
    """u_lambda (or u_lambda - u_0 when ``diff``) at s = |theta - eta|, vectorised.

    Fixed composite rules: graded toward r = 0 on [0, 1/2] and a sinh
    substitution 1 - r = s sinh(v) on [1/2, 1] that resolves the peak of
    width s at r = 1.  Accuracy is about 1e-12 relative.
    """
    d, a = params.d, params.alpha
    s = np.atleast_1d(np.asarray(s, dtype=float))
    t = 1.0 - 0.5 * s * s
    p = 0.5 * (d + a)
    tau = a - lam

    rn, wn = _near_rule()
    r = 0.5 * rn[None, :]
    wr = 0.5 * wn[None, :]
    lr = np.log(r)
    fm1 = np.expm1(-p * _log_g(r, t[:, None]))
    if diff:
        wgt = -np.expm1(lam * lr) * (np.exp((tau - 1.0) * lr) - np.exp((d - 1.0) * lr))
        h = 0.5
        closed = (h ** tau / tau - h ** a / a - h ** d / d + h ** (d + lam) / (d + lam))
    else:
        wgt = np.exp((d + lam - 1.0) * lr) + np.exp((tau - 1.0) * lr)
        closed = 0.5 ** (d + lam) / (d + lam) + 0.5 ** tau / tau
    near = (wgt * fm1 * wr).sum(axis=1) + closed

    vn, wv = _far_rule()
    vmax = np.arcsinh(0.5 / s)
    v = vmax[:, None] * vn[None, :]
    x = s[:, None] * np.sinh(v)
    jac = s[:, None] * np.cosh(v) * vmax[:, None] * wv[None, :]
    r = 1.0 - x
    lr = np.log(r)
    g = x * x + s[:, None] ** 2 * r
    f = np.exp(-p * np.log(g))
    if diff:
        wgt = -np.expm1(lam * lr) * (np.exp((tau - 1.0) * lr) - np.exp((d - 1.0) * lr))
    else:
        wgt = np.exp((d + lam - 1.0) * lr) + np.exp((tau - 1.0) * lr)
    far = (wgt * f * jac).sum(axis=1)
    return near + far


_S_MIN = 1e-11
_S_MAX = 2.0
_N_TABLE = 1400
_Z0 = math.log(_S_MIN)
_DZ = (math.log(_S_MAX) - _Z0) / (_N_TABLE - 1)


def _locate(s):
    """Spline interval index and local offset of s on the shared log-s grid.

    Below the grid the scaled kernel s^p K is held at its end value while the
    returned z = log s is not clamped, so the leading power is kept exactly.
    """
    with np.errstate(divide="ignore"):
        z = np.log(np.maximum(s, 1e-300))
    zc = np.clip(z, _Z0, _Z0 + _DZ * (_N_TABLE - 1))
    u = (zc - _Z0) / _DZ
    k = np.clip(u.astype(np.int32), 0, _N_TABLE - 2)
    return k, (u - k) * _DZ, z


class KernelTable:
    """Cubic spline in z = log s of s^p * K(s), K = u_0 or u_lambda - u_0.

    All tables share one z grid, so the interval lookup of a fixed set of
    arguments can be reused across tables (see :class:`ReducedGeometry`).
    """

    S_MIN = _S_MIN
    S_MAX = _S_MAX

    def __init__(self, params: StableParams, lam: float = 0.0, diff: bool = False):
        self.params = params
        self.lam = float(lam)
        self.diff = bool(diff)
        d, a = params.d, params.alpha
        if diff:
            self.power = max(d + a - 3.0, 0.0)
        else:
            self.power = d + a - 1.0
        z = _Z0 + _DZ * np.arange(_N_TABLE)
        s = np.exp(z)
        if diff and lam == 0.0:
            vals = np.zeros_like(s)
        else:
            vals = kernel_values(params, s, lam=lam, diff=diff)
        self._c = CubicSpline(z, vals * s ** self.power).c  # (4, n-1), highest power first

    def eval_located(self, k, x, scale=None):
        c = self._c
        F = ((c[0, k] * x + c[1, k]) * x + c[2, k]) * x + c[3, k]
        return F if scale is None else F * scale

    def __call__(self, s) -> np.ndarray:
        k, x, z = _locate(np.asarray(s, dtype=float))
        if self.power == 0.0:
            return self.eval_located(k, x)
        return self.eval_located(k, x, np.exp(-self.power * z))


@lru_cache(maxsize=64)
def kernel_table(params: StableParams, lam: float = 0.0, diff: bool = False) -> KernelTable:
    return KernelTable(params, lam=lam, diff=diff)


# ---------------------------------------------------------------- azimuthal reduction

@lru_cache(maxsize=None)
def _psi_rule(k_panels: int, order: int = 8):
    x, w = gauss_legendre(order)
    k = np.arange(k_panels)
    nodes = ((k[:, None] + x[None, :]) / k_panels).ravel()
    weights = np.tile(w, k_panels) / k_panels
    return nodes, weights


# panel length in v and Gauss order of the azimuthal rule psi = 2 q sinh(v)
PSI_PANEL = 2.0
PSI_ORDER = 12


class ReducedGeometry:
    """Precomputed azimuthal quadrature for fixed angle pairs (gamma, gamma').

    The reduced kernel of any table at these pairs is then a spline lookup
    and a weighted sum; assembly reuses one geometry for every lambda.
    """

    def __init__(self, params: StableParams, gamma, gamma_p, offset=None):
        d = params.d
        g, gp = np.broadcast_arrays(np.asarray(gamma, dtype=float), np.asarray(gamma_p, dtype=float))
        self.shape = g.shape
        g = g.ravel()
        gp = gp.ravel()
        # gamma - gamma', exact when supplied (resolves offsets below rounding of gamma)
        dg = g - gp if offset is None else np.broadcast_to(np.asarray(offset, dtype=float), self.shape).ravel()
        self.size = g.size
        self.d = d
        self._scales = {}
        if d == 2:
            s = np.stack([2.0 * np.abs(np.sin(0.5 * dg)), 2.0 * np.abs(np.sin(0.5 * (g + gp)))], axis=1)
            self.groups = [(None,) + _locate(s) + (np.ones_like(s),)]
            return
        om = sphere_area(d - 2)
        sa = np.sin(g)
        ab = np.maximum(sa * np.sin(gp), 1e-300)
        sd = np.abs(np.sin(0.5 * dg))
        q = np.maximum(sd / np.sqrt(ab), 1e-300)
        vmax = np.arcsinh(np.pi / (2.0 * q))
        kp = np.clip(np.ceil(vmax / PSI_PANEL).astype(int), 1, 60)
        self.groups = []
        for kk in np.unique(kp):
            idx = np.nonzero(kp == kk)[0]
            vn, wv = _psi_rule(int(kk), PSI_ORDER)
            v = vmax[idx, None] * vn[None, :]
            psi = 2.0 * q[idx, None] * np.sinh(v)
            jac = 2.0 * q[idx, None] * np.cosh(v) * vmax[idx, None] * wv[None, :]
            if d > 3:
                jac = jac * np.sin(psi) ** (d - 3)
            jac *= om * sa[idx, None] ** (d - 2)
            s2 = 4.0 * sd[idx, None] ** 2 + 4.0 * ab[idx, None] * np.sin(0.5 * psi) ** 2
            k, x, z = _locate(np.sqrt(s2))
            self.groups.append((idx, k, x, z, jac))

    def evaluate(self, table: KernelTable) -> np.ndarray:
        out = np.empty(self.size)
        for n, (idx, k, x, z, w) in enumerate(self.groups):
            if table.power == 0.0:
                vals = table.eval_located(k, x)
            else:
                key = (n, table.power)
                sc = self._scales.get(key)
                if sc is None:
                    sc = np.exp(-table.power * z) * w
                    self._scales[key] = sc
                vals = table.eval_located(k, x, sc)
            if table.power == 0.0:
                vals = vals * w
            if idx is None:
                out[:] = vals.sum(axis=1)
            else:
                out[idx] = vals.sum(axis=1)
        return out.reshape(self.shape)


def reduce_table(params: StableParams, table, gamma, gamma_p, offset=None) -> np.ndarray:
    """Azimuthally reduced kernel, including the surface measure in the polar angle.

    For axisymmetric f, int_S f(theta) K(<theta, eta>) dsigma = int_0^pi f(g) R(g, g') dg,
    with g' the polar angle of eta.  ``table`` maps s = |theta - eta| to K.
    """
    return ReducedGeometry(params, gamma, gamma_p, offset).evaluate(table)


def reduced_kernel(params: StableParams, kind, gamma: float, gamma_prime: float,
                   quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Reduced kernel for ``kind`` = "base" (u_0) or ("diff", lambda).

    Direct (untabulated) evaluation with adaptive quadrature, used as a
    reference for the tabulated assembly path.
    """
    if not (0.0 < gamma < math.pi and 0.0 < gamma_prime < math.pi):
        raise InvalidParameters("polar angles must lie in (0, pi)")
    if kind == "base":
        lam, is_diff = 0.0, False
    else:
        _, lam = kind
        is_diff = True
        if lam == 0.0:
            return 0.0
    if not is_diff and abs(gamma - gamma_prime) < 1e-12:
        raise SingularArgument("base reduced kernel is infinite at coincident angles")

    def K(t):
        if t >= T_CUTOFF:
            raise SingularArgument("coincident points in the reduced kernel")
        pt = KernelPoint(float(t), lam)
        return u_diff(params, pt, quad) if is_diff else u_kernel(params, pt, quad)

    d = params.d
    if d == 2:
        return K(math.cos(gamma - gamma_prime)) + K(math.cos(gamma + gamma_prime))

    c = math.cos(gamma) * math.cos(gamma_prime)
    sgn = math.sin(gamma) * math.sin(gamma_prime)

    def inner(psi):
        vals = np.array([K(min(c + sgn * math.cos(p_), 1.0)) for p_ in psi])
        return vals * np.sin(psi) ** (d - 3)

    scale = max(abs(gamma - gamma_prime), 1e-8)
    edges = np.unique(np.clip([0.0, scale, 4 * scale, 16 * scale, 0.5, math.pi], 0.0, math.pi))
    val, _ = adaptive_quad(inner, edges, rtol=quad.rel_tol, atol=quad.abs_tol, max_panels=quad.max_subdivisions)
    return sphere_area(d - 2) * math.sin(gamma) ** (d - 2) * val


# ---------------------------------------------------------------- kernel bounds

@dataclass
class BoundReport:
    c_lower: float
    C_upper: float
    delta: float
    worst_margin: float
    n_samples: int
    log_branch: bool
    ratios: list


def kernel_bound_check(params: StableParams, samples, delta: float,
                       quad: QuadratureSpec = QuadratureSpec()) -> BoundReport:
    """Fit the smallest constants c, C making the two-sided 1/(alpha - lambda) bounds hold.

    lower:  1/tau - c <= u_lambda(t) - u_0(t)
    upper:  u_lambda(t) - u_0(t) <= 1/tau + C/tau^{1-delta} + C B(t)/tau^delta,

    with tau = alpha - lambda and B(t) = max(1, (1-t)^{-(d+alpha-3)/2}); when
    d + alpha = 3 the power is replaced by max(1, -log s), s = sqrt(2(1-t)).
    """
    if not (0.0 < delta < 1.0):
        raise InvalidParameters("delta must lie in (0, 1)")
    d, a = params.d, params.alpha
    log_branch = abs(d + a - 3.0) < 1e-12
    rows = []
    for t, lam in samples:
        if not (0.0 <= lam < a < lam + 1.0) and lam != 0.0:
            raise InvalidParameters("samples need 0 < lambda < alpha < lambda + 1")
        v = u_diff(params, KernelPoint(float(t), float(lam)), quad)
        tau = a - lam
        if log_branch:
            B = max(1.0, -math.log(math.sqrt(2.0 * (1.0 - t))))
        else:
            B = max(1.0, (1.0 - t) ** (-(d + a - 3.0) / 2.0))
        rows.append((t, lam, v, tau, B))

    c = max(0.0, max(1.0 / tau - v for _, _, v, tau, _ in rows))
    C = 0.0
    for _, _, v, tau, B in rows:
        denom = tau ** (delta - 1.0) + B * tau ** (-delta)
        C = max(C, (v - 1.0 / tau) / denom)
    worst = -math.inf
    for _, _, v, tau, B in rows:
        lower = 1.0 / tau - c
        upper = 1.0 / tau + C * tau ** (delta - 1.0) + C * B * tau ** (-delta)
        worst = max(worst, lower - v, v - upper)
    ratios = [v * tau for _, _, v, tau, _ in rows]
    return BoundReport(c, C, delta, worst, len(rows), log_branch, ratios)
