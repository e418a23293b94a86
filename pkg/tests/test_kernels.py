import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from martin_cone import (InvalidParameters, KernelPoint, SingularArgument, StableParams, gamma,
                         kernel_bound_check, reduced_kernel, u_diff, u_kernel)
from martin_cone.kernels import kernel_table, kernel_values, reduce_table


def unfolded(d, a, lam, t):
    """u_lambda(t) in extended precision.

    The tail r > 1 is mapped back by r -> 1/r and r = s^m, m = 1/(alpha - lambda),
    removes the endpoint power at r = 0.
    """
    mp.mp.dps = 25
    m = 1 / mp.mpf(a - lam)

    def f(s):
        r = s ** m
        return m * (s ** (m * (d + lam) - 1) + 1) * (r * r - 2 * r * t + 1) ** (-(d + a) / 2)

    pts = [0, mp.mpf(t) ** (1 / m), 1] if t > 0 else [0, 1]
    return float(mp.quad(f, pts))


BETA_TRIPLES = [(2, 1.0, 0.0), (2, 1.0, 0.5), (2, 0.5, 0.2), (3, 1.5, 1.0), (3, 1.0, -0.5), (5, 0.3, -2.0)]


@pytest.mark.parametrize("d,a,lam", BETA_TRIPLES)
def test_beta_identity_at_antipode(d, a, lam):
    exact = gamma(d + lam) * gamma(a - lam) / gamma(d + a)
    assert u_kernel(StableParams(d, a), KernelPoint(-1.0, lam)) == pytest.approx(exact, rel=1e-12)


@pytest.mark.parametrize("d,a", [(2, 1.0), (2, 0.3), (3, 1.7), (4, 1.0)])
def test_orthogonal_value_is_half_beta(d, a):
    exact = 0.5 * gamma(d / 2) * gamma(a / 2) / gamma((d + a) / 2)
    assert u_kernel(StableParams(d, a), KernelPoint(0.0, 0.0)) == pytest.approx(exact, rel=1e-12)


def test_examples():
    p = StableParams(2, 1.0)
    assert u_kernel(p, KernelPoint(-1.0, 0.0)) == pytest.approx(0.5, rel=1e-13)
    assert u_kernel(p, KernelPoint(0.0, 0.0)) == pytest.approx(1.0, rel=1e-13)
    assert u_diff(p, KernelPoint(-1.0, 0.5)) == pytest.approx(3 * math.pi / 8 - 0.5, rel=1e-13)
    assert u_diff(p, KernelPoint(0.3, 0.0)) == 0.0


def test_argument_validation():
    p = StableParams(2, 1.0)
    with pytest.raises(SingularArgument):
        u_kernel(p, KernelPoint(1.0, 0.5))
    with pytest.raises(SingularArgument):
        u_diff(p, KernelPoint(1.0 - 1e-13, 0.5))
    with pytest.raises(InvalidParameters):
        u_kernel(p, KernelPoint(0.0, 1.0))
    with pytest.raises(InvalidParameters):
        u_kernel(p, KernelPoint(0.0, -2.0))
    with pytest.raises(InvalidParameters):
        u_diff(p, KernelPoint(0.0, -0.1))


@given(st.integers(2, 4), st.floats(0.1, 1.9), st.floats(-1.0, 0.95), st.floats(0.0, 0.9))
def test_against_unfolded_integral(d, a, t, frac):
    lam = frac * a
    ref = unfolded(d, a, lam, t)
    assert u_kernel(StableParams(d, a), KernelPoint(t, lam)) == pytest.approx(ref, rel=1e-9)


@given(st.integers(2, 4), st.floats(0.1, 1.9), st.floats(-1.0, 0.999), st.floats(0.0, 0.999))
def test_difference_nonnegative_and_consistent(d, a, t, frac):
    p = StableParams(d, a)
    lam = frac * a
    v = u_diff(p, KernelPoint(t, lam))
    assert v >= 0.0
    if t < 0.99:
        direct = u_kernel(p, KernelPoint(t, lam)) - u_kernel(p, KernelPoint(t, 0.0))
        assert v == pytest.approx(direct, rel=1e-8, abs=1e-12)


@given(st.integers(2, 4), st.floats(0.1, 1.9), st.floats(0.0, 0.95))
def test_increasing_in_t(d, a, frac):
    p = StableParams(d, a)
    ts = np.linspace(-1.0, 0.999, 12)
    vals = [u_kernel(p, KernelPoint(float(t), frac * a)) for t in ts]
    assert np.all(np.diff(vals) > 0)


@given(st.integers(2, 4), st.floats(0.1, 1.9), st.floats(-1.0, 0.99))
def test_increasing_in_lambda(d, a, t):
    p = StableParams(d, a)
    lams = np.linspace((a - d) / 2, a - 1e-3, 10)
    vals = [u_kernel(p, KernelPoint(t, float(l))) for l in lams]
    assert np.all(np.diff(vals) > 0)


@pytest.mark.parametrize("d,a", [(2, 1.0), (3, 0.5), (3, 1.5)])
def test_blow_up_rate(d, a):
    p = StableParams(d, a)
    band = [u_kernel(p, KernelPoint(1 - 10.0 ** -k, 0.0)) * (10.0 ** -k) ** ((d + a - 1) / 2)
            for k in range(2, 7)]
    assert max(band) / min(band) < 1.5


@pytest.mark.parametrize("d,a,lam", [(2, 1.0, 0.0), (2, 1.5, 1.2), (3, 0.5, 0.25)])
def test_vectorised_values_match_adaptive(d, a, lam):
    p = StableParams(d, a)
    s = np.array([1e-3, 0.01, 0.3, 1.0, 1.7, 2.0])
    t = 1.0 - 0.5 * s * s
    got = kernel_values(p, s, lam)
    ref = [u_kernel(p, KernelPoint(float(tt), lam)) for tt in t]
    assert np.allclose(got, ref, rtol=1e-9)
    if lam > 0:
        got = kernel_values(p, s, lam, diff=True)
        ref = [u_diff(p, KernelPoint(float(tt), lam)) for tt in t]
        assert np.allclose(got, ref, rtol=1e-9)


def test_reduced_two_point_sum():
    p = StableParams(2, 1.0)
    g, gp = math.pi / 2, math.pi / 4
    expect = u_kernel(p, KernelPoint(math.cos(g - gp), 0.0)) + u_kernel(p, KernelPoint(math.cos(g + gp), 0.0))
    assert reduced_kernel(p, "base", g, gp) == pytest.approx(expect, rel=1e-13)
    assert reduced_kernel(p, ("diff", 0.0), 0.4, 1.1) == 0.0
    with pytest.raises(SingularArgument):
        reduced_kernel(p, "base", 0.7, 0.7)


def test_reduced_kernel_d3_against_azimuthal_quadrature():
    p = StableParams(3, 1.0)
    g, gp = math.pi / 2, math.pi / 4

    def integrand(phi):
        t = math.cos(g) * math.cos(gp) + math.sin(g) * math.sin(gp) * math.cos(phi)
        return u_kernel(p, KernelPoint(t, 0.0))

    ref = math.sin(g) * quad(integrand, 0.0, 2 * math.pi, epsabs=1e-13, epsrel=1e-12)[0]
    assert reduced_kernel(p, "base", g, gp) == pytest.approx(ref, rel=1e-8)


@pytest.mark.parametrize("d,a", [(3, 1.0), (3, 1.5), (4, 0.7)])
def test_tabulated_reduction_matches_direct(d, a):
    p = StableParams(d, a)
    gam = np.array([0.3, 0.9, 1.4, 2.0])
    gp = 0.8
    base = reduce_table(p, kernel_table(p, 0.0), gam, np.full(4, gp))
    diff = reduce_table(p, kernel_table(p, 0.5 * a, diff=True), gam, np.full(4, gp))
    for k, g in enumerate(gam):
        assert base[k] == pytest.approx(reduced_kernel(p, "base", float(g), gp), rel=1e-8)
        assert diff[k] == pytest.approx(reduced_kernel(p, ("diff", 0.5 * a), float(g), gp), rel=1e-8)


def test_bound_check_log_branch_and_margin():
    p = StableParams(2, 1.0)
    samples = [(t, lam) for t in (-0.5, 0.0, 0.9) for lam in (0.2, 0.6, 0.99)]
    rep = kernel_bound_check(p, samples, 0.5)
    assert rep.log_branch
    assert rep.worst_margin <= 1e-12
    assert rep.c_lower >= 0 and rep.C_upper >= 0


def test_bound_check_near_alpha():
    p = StableParams(2, 1.2)
    rep = kernel_bound_check(p, [(0.0, 1.2 - 1e-3)], 0.5)
    assert not rep.log_branch
    assert rep.ratios[0] == pytest.approx(1.0, abs=0.05)
    assert rep.worst_margin <= 1e-12


def test_bound_check_lambda_zero_sample():
    rep = kernel_bound_check(StableParams(2, 1.0), [(0.0, 0.0)], 0.5)
    assert rep.c_lower >= 1.0
    assert rep.worst_margin <= 1e-12


@pytest.mark.parametrize("t", [2.2250738585072014e-308, 5e-324, -5e-324])
def test_subnormal_t_matches_zero(t):
    p = StableParams(2, 1.0)
    ref = u_kernel(p, KernelPoint(0.0, 0.3))
    assert u_kernel(p, KernelPoint(t, 0.3)) == pytest.approx(ref, rel=1e-12)
    assert u_diff(p, KernelPoint(t, 0.3)) == pytest.approx(u_diff(p, KernelPoint(0.0, 0.3)), rel=1e-12)
