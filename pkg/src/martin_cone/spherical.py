"""Spherical fractional Laplacian and radial operator on axisymmetric functions.

Functions on S^{d-1} that depend only on the polar angle gamma (angle to the
cone axis) are integrated against azimuthally reduced kernels, so every
spherical integral becomes a 1-d integral over gamma in (0, pi).

On the cap {gamma < Theta} we use the collocation ansatz

    f(gamma) = w(gamma) g(gamma),   w = (cos gamma - cos Theta)_+^{alpha/2},

with g sampled at nodes and interpolated by hat functions.  The
hypersingular part of the operator at a node x_i is treated by a quadratic
Taylor subtraction of g around x_i, whose moments are computed by
principal-value quadrature of the exact functions w (gamma - x_i)^k.  The
remainder vanishes to third order at x_i and is integrated against the
kernel on all cells that do not touch x_i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .constants import StableParams, frac_lap_normalizer, sphere_area
from .errors import InvalidParameters, NotSmoothHere
from .kernels import ReducedGeometry, kernel_table, reduce_table
from .quadrature import composite_gl, gauss_legendre


# ---------------------------------------------------------------- axisymmetric functions

@dataclass(frozen=True)
class AxisymmetricFunction:
    """f(gamma) on S^{d-1}, vectorised in the polar angle, zero for gamma > support."""

    value: Callable[[np.ndarray], np.ndarray]
    support: float = math.pi
    name: str = ""

    def __call__(self, gamma):
        g = np.asarray(gamma, dtype=float)
        out = np.asarray(self.value(np.minimum(g, self.support)), dtype=float)
        out = np.broadcast_to(out, g.shape)
        return np.where(g <= self.support, out, 0.0)


def constant_function(c: float = 1.0) -> AxisymmetricFunction:
    return AxisymmetricFunction(lambda g: np.full_like(np.asarray(g, float), c), math.pi, "constant")


def boundary_weight(theta: float, alpha: float) -> AxisymmetricFunction:
    """w(gamma) = (cos gamma - cos Theta)_+^{alpha/2}."""
    ct = math.cos(theta)

    def w(g):
        return np.maximum(np.cos(g) - ct, 0.0) ** (0.5 * alpha)

    return AxisymmetricFunction(w, theta, "boundary_weight")


# ---------------------------------------------------------------- quadrature helpers

_ORDER = 10


def _geo_points(a: float, b: float, h0: float, ratio: float = 2.0) -> np.ndarray:
    """Edges a, a + h0, a + h0 r, ... b (also works for b < a)."""
    L = abs(b - a)
    sgn = 1.0 if b >= a else -1.0
    if L == 0.0:
        return np.array([a])
    h0 = min(h0, L)
    pts = [0.0]
    x = h0
    while x < L * 0.999:
        pts.append(x)
        x *= ratio
    pts.append(L)
    return a + sgn * np.asarray(pts)


def _graded_edges(a: float, b: float, ha: Optional[float], hb: Optional[float],
                  ratio: float = 2.0) -> np.ndarray:
    """Panel edges on [a, b] refined geometrically toward a (first width ha) and b (hb)."""
    if b <= a:
        return np.array([a, b])
    m = 0.5 * (a + b)
    if ha is None:
        left = np.linspace(a, m, 3)
    else:
        left = _geo_points(a, m, ha, ratio)
    if hb is None:
        right = np.linspace(b, m, 3)
    else:
        right = _geo_points(b, m, hb, ratio)
    return np.unique(np.concatenate([left, right[::-1]]))


def _power_graded(h: float, m: float, n: int = 20):
    """Offsets delta = h u^m in (0, h) with Gauss points in u; weights include the Jacobian."""
    u, wu = gauss_legendre(n)
    return h * u ** m, h * m * u ** (m - 1.0) * wu


def _grade_power(alpha: float) -> float:
    """Exponent m of the offsets delta = h u^m used next to the weak |delta|^{1-alpha} singularity.

    An integer m keeps the Jacobian polynomial, and m (2 - alpha) >= 3 makes
    the singular term at least quadratic in u.
    """
    m = 3.0 / (2.0 - alpha)
    return float(round(m)) if abs(m - round(m)) < 1e-9 else float(math.ceil(m) + 1)


# innermost panel of the adjacent-cell rule, as a fraction of the cell
ADJACENT_INNER = 1e-2


def _weakly_singular_rule(length: float, alpha: float, inner: float = 1e-3):
    """Offsets in (0, length) for an integrand with a |delta|^{1-alpha} singularity at 0.

    The innermost panel uses the power-graded substitution, the rest
    geometric Gauss panels.
    """
    h0 = inner * length
    d0, w0 = _power_graded(h0, _grade_power(alpha))
    d1, w1 = _rule(_geo_points(h0, length, h0))
    return np.concatenate([d0, d1]), np.concatenate([w0, w1])


def _rule(edges, order=_ORDER):
    return composite_gl(edges, order)


# ---------------------------------------------------------------- spherical Laplacian

@dataclass
class PVResult:
    value: float
    error: float
    window: float


def _sph_lap_many(params: StableParams, funcs, eta: float, support: float,
                  eps_factor: float = 1e-3):
    """Principal-value spherical fractional Laplacian of several functions at eta.

    All ``funcs`` share the support [0, support] and are C^2 near eta.  The
    symmetric window integrand is integrated on (eps, delta) and the missing
    piece removed by Richardson extrapolation in eps (leading order eps^{2-alpha}).
    Returns (values, errors, delta).
    """
    a = params.alpha
    A = frac_lap_normalizer(params.d, a)
    tab = kernel_table(params)

    def K(g):
        return reduce_table(params, tab, g, eta)

    fe = np.array([float(np.asarray(f(np.array([eta])))[0]) for f in funcs])
    inside = eta < support
    total = np.zeros(len(funcs))
    err = np.zeros(len(funcs))
    if inside:
        delta = 0.5 * min(eta, support - eta)
        if support >= math.pi:
            delta = 0.5 * min(eta, math.pi - eta)
        delta = min(delta, 0.5)
        # window, two truncations
        win = []
        for eps in (eps_factor * delta, 0.5 * eps_factor * delta):
            x, w = _rule(_geo_points(eps, delta, eps))
            kp, km = K(eta + x), K(eta - x)
            vals = []
            for f, f0 in zip(funcs, fe):
                F = (f(eta + x) - f0) * kp + (f(eta - x) - f0) * km
                vals.append(np.dot(F, w))
            win.append(np.array(vals))
        r = 2.0 ** (2.0 - a)
        rich = (r * win[1] - win[0]) / (r - 1.0)
        total += rich
        err += np.abs(rich - win[1])
        lo_end, hi_start = eta - delta, eta + delta
    else:
        delta = 0.0
        lo_end, hi_start = eta, eta

    if not inside:
        # eta beyond the support: plain integral of f against the kernel
        x, w = _rule(_graded_edges(0.0, support, 0.5 * eta, max(1e-14, min(1e-3, eta - support))))
        kx = K(x)
        total = np.array([np.dot(f(x) * kx, w) for f in funcs])
        return A * total, A * err, 0.0
    # left outer piece [0, eta - delta]
    if lo_end > 0.0:
        x, w = _rule(_graded_edges(0.0, lo_end, 0.5 * eta, max(delta, 1e-3 * lo_end)))
        kx = K(x)
        for k, (f, f0) in enumerate(zip(funcs, fe)):
            total[k] += np.dot((f(x) - f0) * kx, w)
    # right outer piece up to the support
    top = min(support, math.pi)
    if hi_start < top:
        x, w = _rule(_graded_edges(hi_start, top, delta, 1e-14 * top if top < math.pi else None))
        kx = K(x)
        for k, (f, f0) in enumerate(zip(funcs, fe)):
            total[k] += np.dot((f(x) - f0) * kx, w)
    # exterior killing term
    if support < math.pi:
        x, w = _rule(_graded_edges(support, math.pi, 0.25 * (support - eta), None))
        kappa = np.dot(K(x), w)
        total -= fe * kappa
    return A * total, A * err, delta


def apply_sph_lap(params: StableParams, f: AxisymmetricFunction, gamma_prime: float) -> PVResult:
    """Delta_S^{alpha/2} f at polar angle gamma_prime (principal value)."""
    if not (0.0 < gamma_prime < math.pi):
        raise InvalidParameters("evaluation angle must lie in (0, pi)")
    if abs(gamma_prime - f.support) < 1e-12 and f.support < math.pi:
        raise NotSmoothHere("evaluation angle sits on the edge of the support")
    v, e, delta = _sph_lap_many(params, [f], gamma_prime, f.support)
    return PVResult(float(v[0]), float(e[0]), delta)


def apply_radial(params: StableParams, f: AxisymmetricFunction, gamma_prime: float,
                 lam: float) -> float:
    """R_lambda f at gamma_prime: A int f (u_lambda - u_0) dsigma; weakly singular, no PV."""
    d, a = params.d, params.alpha
    if not (-d < lam < a):
        raise InvalidParameters(f"lambda must lie in (-d, alpha), got {lam}")
    if not (0.0 < gamma_prime < math.pi):
        raise InvalidParameters("evaluation angle must lie in (0, pi)")
    if lam == 0.0:
        return 0.0
    A = frac_lap_normalizer(d, a)
    tab = kernel_table(params, float(lam), True)
    top = min(f.support, math.pi)
    eta = gamma_prime
    total = 0.0
    if eta < top:
        mid = 0.5 * (eta + top)
        x, w = _rule(_graded_edges(0.0, 0.5 * eta, 0.5 * eta, None))
        total += np.dot(f(x) * reduce_table(params, tab, x, eta), w)
        x, w = _rule(_graded_edges(mid, top, None, 1e-14 if top < math.pi else None))
        total += np.dot(f(x) * reduce_table(params, tab, x, eta), w)
        for sgn, length in ((-1.0, 0.5 * eta), (1.0, mid - eta)):
            # offsets from eta, graded toward the weak singularity at 0
            dx, w = _weakly_singular_rule(length, a)
            dx = sgn * dx
            x = eta + dx
            total += np.dot(f(x) * reduce_table(params, tab, x, eta, offset=dx), w)
    else:
        x, w = _rule(_graded_edges(0.0, top, 0.5 * eta, max(1e-14, min(1e-3, eta - top))))
        total += np.dot(f(x) * reduce_table(params, tab, x, eta), w)
    return A * total


# ---------------------------------------------------------------- collocation grid

@dataclass
class CapGrid:
    """Collocation nodes for the cap {gamma < Theta}.

    ``weights`` integrate node values (through the hat basis) against the
    cap surface measure of S^{d-1}.
    """

    theta: float
    nodes: np.ndarray
    weights: np.ndarray
    grading: float
    d: int
    boundary_exponent: Optional[float] = None

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def cell_edges(self) -> np.ndarray:
        return np.concatenate([[0.0], self.nodes, [self.theta]])


def build_cap_grid(theta: float, n: int, grading: float = 1.0, d: int = 2,
                   alpha: Optional[float] = None) -> CapGrid:
    """Nodes gamma_k = Theta (1 - (1 - s_k)^grading), s_k = (k - 1/2)/n.

    grading = 1 is uniform; grading > 1 clusters nodes toward the cap edge.
    """
    if not (0.0 < theta < math.pi):
        raise InvalidParameters(f"theta must lie in (0, pi), got {theta}")
    if int(n) != n or n < 4:
        raise InvalidParameters(f"need at least 4 nodes, got {n}")
    if not grading >= 1.0:
        raise InvalidParameters(f"grading must be >= 1, got {grading}")
    n = int(n)
    s = (np.arange(1, n + 1) - 0.5) / n
    nodes = theta * (1.0 - (1.0 - s) ** grading)
    edges = np.concatenate([[0.0], nodes, [theta]])
    om = sphere_area(d - 1)
    x, w = composite_gl(edges, 8)
    meas = om * np.sin(x) ** (d - 2) * w
    weights = np.zeros(n)
    hat_j, hat_v = _hat_values(nodes, theta, x)
    for col in range(2):
        np.add.at(weights, hat_j[:, col], hat_v[:, col] * meas)
    return CapGrid(theta=theta, nodes=nodes, weights=weights, grading=float(grading), d=int(d),
                   boundary_exponent=None if alpha is None else 0.5 * alpha)


def _hat_values(nodes: np.ndarray, theta: float, x: np.ndarray):
    """Indices and values of the two hat functions alive at each point x.

    First and last cells carry the constant extension of the end nodes.
    """
    n = nodes.size
    cell = np.searchsorted(nodes, x, side="right")  # 0..n
    j = np.zeros((x.size, 2), dtype=int)
    v = np.zeros((x.size, 2))
    first = cell == 0
    last = cell == n
    mid = ~(first | last)
    j[first, 0] = 0
    v[first, 0] = 1.0
    j[last, 0] = n - 1
    v[last, 0] = 1.0
    k = cell[mid]
    xl, xr = nodes[k - 1], nodes[k]
    t = (x[mid] - xl) / (xr - xl)
    j[mid, 0], j[mid, 1] = k - 1, k
    v[mid, 0], v[mid, 1] = 1.0 - t, t
    return j, v


# ---------------------------------------------------------------- assembly

@dataclass
class OperatorMatrix:
    """Collocation matrix of A_lambda acting on the node values of g, f = w g.

    ``matrix @ g`` equals (A_lambda f)(x_i) / w(x_i); the Perron eigenvalue of
    ``matrix`` is the principal eigenvalue mu(lambda) of the cap problem.
    """

    lam: float
    matrix: np.ndarray
    grid: CapGrid
    diagnostics: dict = field(default_factory=dict)

    def apply(self, g) -> np.ndarray:
        """(A_lambda f)(x_i) for f = w g."""
        return self.diagnostics["w_nodes"] * (self.matrix @ np.asarray(g, dtype=float))


@dataclass
class _CellRule:
    x: np.ndarray
    w: np.ndarray
    cell: np.ndarray
    hat_j: np.ndarray
    hat_v: np.ndarray


def _cell_rule(grid: CapGrid, order: int) -> _CellRule:
    edges = grid.cell_edges
    xs, ws, cs = [], [], []
    ncell = edges.size - 1
    for c in range(ncell):
        a, b = edges[c], edges[c + 1]
        if c == ncell - 1:
            e = _graded_edges(a, b, None, 1e-12 * (b - a), ratio=3.0)
            x, w = composite_gl(e, order)
        else:
            x, w = composite_gl([a, b], order)
        xs.append(x)
        ws.append(w)
        cs.append(np.full(x.size, c))
    x = np.concatenate(xs)
    hj, hv = _hat_values(grid.nodes, grid.theta, x)
    return _CellRule(x, np.concatenate(ws), np.concatenate(cs), hj, hv)


def _fd_weights(z: np.ndarray, x0: float) -> tuple[np.ndarray, np.ndarray]:
    """Three-point weights for the first and second derivative at x0."""
    V = np.vstack([np.ones(3), z - x0, 0.5 * (z - x0) ** 2])
    inv = np.linalg.inv(V)
    # columns of inv.T: weights reproducing (value, d1, d2)
    return inv[:, 1], inv[:, 2]


class _Assembler:
    """Caches the lambda-independent pieces of the collocation matrix."""

    def __init__(self, params: StableParams, grid: CapGrid, order: int = 8):
        self.params = params
        self.grid = grid
        self.A = frac_lap_normalizer(params.d, params.alpha)
        self.order = order
        self.weight = boundary_weight(grid.theta, params.alpha)
        self.rule = _cell_rule(grid, order)
        self.w_nodes = self.weight(grid.nodes)
        n = grid.n
        self.adjacent = np.zeros((n, self.rule.x.size), dtype=bool)
        for i in range(n):
            self.adjacent[i] = (self.rule.cell == i) | (self.rule.cell == i + 1)
        L = np.zeros((self.rule.x.size, n))
        for col in range(2):
            np.add.at(L, (np.arange(self.rule.x.size), self.rule.hat_j[:, col]), self.rule.hat_v[:, col])
        self.L = L
        self._base = None
        self._far = None
        self._adj = None

    def far_geometry(self) -> ReducedGeometry:
        """Geometry of all (node, cell point) pairs on cells not touching the node."""
        if self._far is None:
            rows, cols = np.nonzero(~self.adjacent)
            self._far_index = (rows, cols)
            self._far = ReducedGeometry(self.params, self.rule.x[cols], self.grid.nodes[rows])
        return self._far

    def far_kernel(self, table) -> np.ndarray:
        """A K(point, node) on non-adjacent pairs, zero on adjacent ones; shape (n, points)."""
        geo = self.far_geometry()
        out = np.zeros(self.adjacent.shape)
        out[self._far_index] = self.A * geo.evaluate(table)
        return out

    def adjacent_geometry(self):
        """Graded points on the cells touching each node, flattened over rows."""
        if self._adj is None:
            g = self.grid
            ds, ws, rows = [], [], []
            for i in range(g.n):
                da, wa = self._adjacent_rule(i)
                ds.append(da)
                ws.append(wa)
                rows.append(np.full(da.size, i))
            da = np.concatenate(ds)
            row = np.concatenate(rows)
            xa = g.nodes[row] + da
            hj, hv = _hat_values(g.nodes, g.theta, xa)
            wa = np.concatenate(ws) * self.weight(xa)
            geo = ReducedGeometry(self.params, xa, g.nodes[row], offset=da)
            self._adj = (geo, row, hj, hv, wa)
        return self._adj

    def _adjacent_rule(self, i: int):
        """Offsets from node i covering the two cells that touch it, graded toward the node."""
        g = self.grid
        edges = g.cell_edges
        xi = g.nodes[i]
        h_l = xi - edges[i]
        h_r = edges[i + 2] - xi
        a = self.params.alpha
        dl, wl = _weakly_singular_rule(h_l, a, ADJACENT_INNER)
        if i == g.n - 1:
            # last cell also carries the edge behaviour of w at Theta
            half = 0.5 * h_r
            d1, w1 = _weakly_singular_rule(half, a, ADJACENT_INNER)
            d2, w2 = composite_gl(_graded_edges(half, h_r, None, 1e-12 * h_r, ratio=3.0), self.order)
            dr, wr = np.concatenate([d1, d2]), np.concatenate([w1, w2])
        else:
            dr, wr = _weakly_singular_rule(h_r, a, ADJACENT_INNER)
        return np.concatenate([-dl, dr]), np.concatenate([wl, wr])

    def base_rows(self) -> tuple[np.ndarray, dict]:
        if self._base is not None:
            return self._base
        p, g = self.params, self.grid
        n = g.n
        x = g.nodes
        rule = self.rule
        tab = kernel_table(p)
        K0 = self.far_kernel(tab)
        wq = self.weight(rule.x) * rule.w
        H = (K0 * wq[None, :]) @ self.L  # (n, n)
        rows = np.zeros((n, n))
        windows = np.zeros(n)
        pv_err = np.zeros(n)
        upwinded = []
        w_fun = self.weight.value
        for i in range(n):
            xi = x[i]
            funcs = [
                self.weight,
                AxisymmetricFunction(lambda s, xi=xi: w_fun(s) * (s - xi), g.theta),
                AxisymmetricFunction(lambda s, xi=xi: w_fun(s) * (s - xi) ** 2, g.theta),
            ]
            (c, m1, m2), err, delta = _sph_lap_many(p, funcs, xi, g.theta)
            windows[i] = delta
            pv_err[i] = err[0]
            dlt = x - xi
            Hi = H[i]
            C1 = m1 - Hi @ dlt
            C2 = 0.5 * (m2 - Hi @ dlt ** 2)
            row = Hi.copy()
            row[i] += c - Hi.sum()
            if i == 0:
                z = np.array([-x[0], x[0], x[1]])
                d1, d2 = _fd_weights(z, xi)
                row[0] += C1 * (d1[0] + d1[1]) + C2 * (d2[0] + d2[1])
                row[1] += C1 * d1[2] + C2 * d2[2]
            elif i == n - 1:
                # one-sided: linear Taylor term only, keeps neighbour couplings positive
                hl = xi - x[i - 1]
                row[i] += C1 / hl
                row[i - 1] -= C1 / hl
            else:
                z = x[i - 1:i + 2]
                d1, d2 = _fd_weights(z, xi)
                trial = row[i - 1:i + 2] + C1 * d1 + C2 * d2
                if min(trial[0], trial[2]) < 0.0:
                    # upwind the first-order term so neighbour couplings stay positive
                    if C1 < 0.0:
                        d1 = np.array([-1.0, 1.0, 0.0]) / (xi - x[i - 1])
                    else:
                        d1 = np.array([0.0, -1.0, 1.0]) / (x[i + 1] - xi)
                    trial = row[i - 1:i + 2] + C1 * d1 + C2 * d2
                    upwinded.append(i)
                row[i - 1:i + 2] = trial
            rows[i] = row
        diag = {"pv_window": windows, "pv_error": pv_err, "upwinded_rows": upwinded}
        self._base = (rows, diag)
        return self._base

    def radial_rows(self, lam: float) -> np.ndarray:
        p, g = self.params, self.grid
        n = g.n
        if lam == 0.0:
            return np.zeros((n, n))
        x = g.nodes
        rule = self.rule
        tab = kernel_table(p, float(lam), True)
        Kl = self.far_kernel(tab)
        wq = self.weight(rule.x) * rule.w
        R = (Kl * wq[None, :]) @ self.L
        geo, row, hj, hv, wa = self.adjacent_geometry()
        vals = self.A * geo.evaluate(tab) * wa
        for col in range(2):
            np.add.at(R, (row, hj[:, col]), hv[:, col] * vals)
        return R

    def operator(self, lam: float) -> OperatorMatrix:
        base, diag = self.base_rows()
        rows = base + self.radial_rows(lam)
        M = rows / self.w_nodes[:, None]
        d = dict(diag)
        d["w_nodes"] = self.w_nodes
        n = M.shape[0]
        d["min_offdiag"] = float(M[~np.eye(n, dtype=bool)].min()) if n > 1 else 0.0
        return OperatorMatrix(lam=float(lam), matrix=M, grid=self.grid, diagnostics=d)


def assemble_operator(params: StableParams, lam: float, grid: CapGrid,
                      assembler: Optional[_Assembler] = None) -> OperatorMatrix:
    """Dense collocation matrix of Delta_S^{alpha/2} + R_lambda on the cap grid."""
    if not (0.0 <= lam < params.alpha):
        raise InvalidParameters(f"lambda must lie in [0, alpha), got {lam}")
    if grid.d != params.d:
        raise InvalidParameters("grid was built for a different dimension")
    asm = assembler if assembler is not None else _Assembler(params, grid)
    return asm.operator(lam)


def cap_profile(params: StableParams, theta: float) -> AxisymmetricFunction:
    """Barrier profile on the cap, in the polar angle.

    The inverted exit time of the (d-1)-ball of radius tan(Theta/2), lifted to
    the sphere: 2^alpha C_{d-1,alpha} (tan^2(Theta/2) - tan^2(gamma/2))_+^{alpha/2}.
    """
    from .constants import ball_exit_constant

    a = params.alpha
    c = 2.0 ** a * ball_exit_constant(params.d - 1, a)
    e2 = math.tan(0.5 * theta) ** 2

    def phi(g):
        return c * np.maximum(e2 - np.tan(0.5 * np.asarray(g)) ** 2, 0.0) ** (0.5 * a)

    return AxisymmetricFunction(phi, theta, "cap_profile")
