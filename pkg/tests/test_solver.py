import math

import numpy as np
import pytest

from martin_cone import (InvalidParameters, NoPositiveEigenvector, SolverOptions, StableParams,
                         UnsupportedAperture, barrier_bounds, principal_eigenvalue, solve_beta)
from martin_cone.solver import _ExponentProblem

# DERIVED: eigen route at N = 128 for (2, 1, pi/3); N = 64, 128, 256 refine at ratio 3.9 and the
# Richardson limit 0.69748457 lies within 1e-7.
BETA_PI_3 = 0.6974846950066056


def test_scalar_eigenvalue():
    mu, v = principal_eigenvalue(np.array([[-2.0]]))
    assert mu == -2.0 and np.array_equal(v, [1.0])


def test_perron_pair_of_positive_coupling():
    mu, v = principal_eigenvalue(np.array([[-2.0, 1.0], [1.0, -2.0]]))
    assert mu == pytest.approx(-1.0, abs=1e-14)
    assert np.allclose(v, [1.0, 1.0])


def test_no_positive_eigenvector():
    V = np.array([[1.0, 1.0], [-1.0, -2.0]])
    with pytest.raises(NoPositiveEigenvector):
        principal_eigenvalue(V @ np.diag([1.0, 2.0]) @ np.linalg.inv(V))


@pytest.mark.parametrize("d,a,th", [(2, 1.0, 0.3), (2, 0.5, 1.0), (3, 1.2, 0.6)])
def test_mu_negative_at_zero_and_increasing(d, a, th):
    prob = _ExponentProblem(StableParams(d, a), th, 32, 1.0)
    mus = [prob.mu(lam) for lam in (0.0, 0.2 * a, 0.5 * a, 0.8 * a)]
    assert mus[0] < 0
    assert all(x < y for x, y in zip(mus, mus[1:]))


@pytest.mark.parametrize("d,a", [(2, 1.0), (3, 1.5)])
def test_half_space(d, a):
    res = solve_beta(StableParams(d, a), math.pi / 2, SolverOptions(nodes=128))
    assert abs(res.beta - a / 2) <= 5e-3
    assert 0 < res.beta < a
    assert res.residual <= 1e-8


def test_regression_baseline_pi_over_3():
    p = StableParams(2, 1.0)
    res = solve_beta(p, math.pi / 3, SolverOptions(nodes=128))
    assert res.beta == pytest.approx(BETA_PI_3, rel=1e-9)
    assert res.self_convergence <= 1e-4
    lo, hi = barrier_bounds(p, math.pi / 3)
    assert lo <= res.beta <= hi


def test_limit_toward_alpha():
    p = StableParams(2, 1.0)
    gaps = [solve_beta(p, th, SolverOptions(nodes=64)).gap for th in (0.2, 0.1, 0.05, 0.025)]
    assert all(g > 0 for g in gaps)
    assert all(x > y for x, y in zip(gaps, gaps[1:]))


def test_result_fields():
    res = solve_beta(StableParams(2, 1.0), 0.2, SolverOptions(nodes=32, barrier=True))
    keys = set(res.as_dict())
    assert {"d", "alpha", "theta", "beta", "beta_lower", "beta_upper", "residual", "nodes",
            "self_convergence", "predicted"} <= keys
    assert res.grid_certified
    assert res.beta_lower <= res.beta <= res.beta_upper
    assert res.predicted == pytest.approx(1 - 0.25 * 0.04, rel=1e-14)


def test_barrier_ordering_and_aperture_limit():
    p = StableParams(2, 1.5)
    lo, hi = barrier_bounds(p, 0.3)
    assert 0 < lo <= hi < 1.5
    with pytest.raises(UnsupportedAperture):
        barrier_bounds(p, 1.2)


def test_option_validation():
    for kw in (dict(nodes=3), dict(nodes=10.5), dict(grading=0.9), dict(tol=0.0), dict(barrier_samples=2)):
        with pytest.raises(InvalidParameters):
            SolverOptions(**kw)
    for th in (0.0, math.pi):
        with pytest.raises(InvalidParameters):
            solve_beta(StableParams(2, 1.0), th)
