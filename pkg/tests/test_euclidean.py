import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from martin_cone import (ConeGeometry, FracLapSpec, InvalidParameters, NotSmoothHere, OriginSingular,
                         ScalarField, StableParams, ball_exit_constant, constant_field, cylinder_field,
                         cylinder_profile, exit_field, exit_profile, frac_lap_at, invert, kelvin,
                         profile_phi, riesz, riesz_field)
from martin_cone.euclidean import Sphere
from martin_cone.spherical import cap_profile

P21 = StableParams(2, 1.0)
vec2 = st.tuples(st.floats(-3, 3), st.floats(-3, 3)).map(np.array)


def gaussian(params, scale=1.0):
    return ScalarField(params, lambda y: np.exp(-scale * scale * np.sum(y * y, axis=-1)), name="gaussian")


def gaussian_frac_lap(d, a, r):
    """Delta^{a/2} exp(-|x|^2) from its Fourier transform (confluent hypergeometric form)."""
    return float(-2 ** a * mp.gamma((d + a) / 2) / mp.gamma(d / 2) * mp.hyp1f1((d + a) / 2, d / 2, -r * r))


def test_special_function_examples():
    assert exit_profile(P21, [0.0, 0.0]) == pytest.approx(2 / math.pi, rel=1e-14)
    assert exit_profile(P21, [1.0, 0.0]) == 0.0
    assert exit_profile(P21, [0.0, 2.0]) == 0.0
    assert cylinder_profile(P21, 0.05, [0.0, 7.0]) == pytest.approx(0.05, rel=1e-13)
    assert cylinder_profile(P21, 0.05, [0.05, 0.3]) == 0.0
    assert np.allclose(invert([0.0, 0.0, 0.5]), [0.0, 0.0, 2.0])
    with pytest.raises(OriginSingular):
        riesz(P21, [0.0, 0.0])
    with pytest.raises(OriginSingular):
        invert([0.0, 0.0])


def test_cone_geometry():
    c = ConeGeometry(math.pi / 3)
    assert c.epsilon == pytest.approx(math.tan(math.pi / 6), rel=1e-15)
    assert c.contains([0.0, 1.0]) and not c.contains([1.0, 0.0])
    for bad in (0.0, math.pi, -1.0):
        with pytest.raises(InvalidParameters):
            ConeGeometry(bad)


def test_profile_phi_examples():
    p = StableParams(2, 1.0)
    cone = ConeGeometry(math.pi / 2)
    assert profile_phi(p, cone, [0.0, 1.0]) == pytest.approx(2.0, rel=1e-13)
    th = 0.4
    edge = ConeGeometry(th)
    assert profile_phi(p, edge, [math.sin(th), math.cos(th)]) == pytest.approx(0.0, abs=1e-7)
    assert profile_phi(p, edge, [math.sin(th + 0.1), math.cos(th + 0.1)]) == 0.0
    with pytest.raises(InvalidParameters):
        profile_phi(p, edge, [0.0, 2.0])


@given(st.floats(0.05, 1.5), st.floats(0.0, 1.0), st.floats(0.1, 1.9))
def test_profile_phi_matches_tangent_form(theta, frac, a):
    p = StableParams(3, a)
    g = frac * theta
    pt = [math.sin(g), 0.0, math.cos(g)]
    cone = ConeGeometry(theta)
    # |x^{a/2} - y^{a/2}| <= |x - y|^{a/2}: rounding in the bracket is amplified at the edge
    floor = 2.0 ** a * ball_exit_constant(2, a) * (1e-15 * max(1.0, cone.epsilon ** 2)) ** (0.5 * a)
    assert profile_phi(p, cone, pt) == pytest.approx(float(cap_profile(p, theta)(g)),
                                                     rel=1e-10, abs=floor)


@given(vec2, vec2)
def test_inversion_metric_identity(x, y):
    if np.linalg.norm(x) < 1e-3 or np.linalg.norm(y) < 1e-3:
        return
    lhs = np.linalg.norm(invert(x) - invert(y)) * np.linalg.norm(x) * np.linalg.norm(y)
    assert lhs == pytest.approx(np.linalg.norm(x - y), rel=1e-12, abs=1e-12)


@given(vec2)
def test_kelvin_of_one_is_riesz(y):
    if np.linalg.norm(y) < 1e-3:
        return
    p = StableParams(2, 0.7)
    assert kelvin(constant_field(p))(y[None])[0] == pytest.approx(riesz(p, y), rel=1e-13)


@given(vec2, st.floats(0.1, 1.9))
def test_kelvin_is_an_involution(y, a):
    if np.linalg.norm(y) < 1e-3:
        return
    p = StableParams(2, a)
    for f in (exit_field(p), gaussian(p), cylinder_field(p, 0.3)):
        kk = kelvin(kelvin(f)) if f.name != "cylinder_profile" else None
        if kk is None:
            continue
        assert kk(y[None])[0] == pytest.approx(f(y[None])[0], rel=1e-12, abs=1e-14)


def test_kelvin_maps_spheres():
    s = Sphere((2.0, 0.0), 1.0).inverted()
    assert s.center == pytest.approx((2 / 3, 0.0))
    assert s.radius == pytest.approx(1 / 3)


@given(st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-5, 5)))
def test_cylinder_profile_depends_on_base_only(y):
    p = StableParams(3, 1.3)
    y = np.array(y)
    z = y.copy()
    z[-1] = 0.0
    assert cylinder_profile(p, 0.5, y) == cylinder_profile(p, 0.5, z)
    assert cylinder_profile(p, 0.5, y) >= 0.0


def test_constant_field_has_zero_laplacian():
    e = frac_lap_at(constant_field(P21, 3.0), np.array([0.2, -0.7]))
    assert abs(e.value) < 1e-12


@pytest.mark.parametrize("d,a", [(2, 1.0), (2, 0.4), (3, 1.5)])
def test_exit_profile_at_centre(d, a):
    e = frac_lap_at(exit_field(StableParams(d, a)), np.zeros(d))
    assert e.value == pytest.approx(-1.0, abs=1e-8)
    assert e.error < 1e-6


def test_riesz_harmonic_example():
    e = frac_lap_at(riesz_field(P21), np.array([0.0, 1.0]))
    assert abs(e.value) < 1e-6


@pytest.mark.parametrize("d,a,r", [(2, 1.0, 0.0), (2, 0.5, 0.7), (3, 1.5, 1.2), (2, 1.7, 2.0)])
def test_gaussian_against_fourier_oracle(d, a, r):
    x = np.zeros(d)
    x[0] = r
    e = frac_lap_at(gaussian(StableParams(d, a)), x)
    ref = gaussian_frac_lap(d, a, r)
    assert e.value == pytest.approx(ref, rel=1e-9, abs=1e-11)
    assert abs(e.value - ref) <= 10 * e.error + 1e-12


@pytest.mark.parametrize("r", [0.5, 2.0])
def test_scaling_law(r):
    p = StableParams(2, 0.8)
    x = np.array([0.3, -0.4])
    scaled = ScalarField(p, lambda y: np.exp(-np.sum((r * y) ** 2, axis=-1)), name="scaled")
    lhs = frac_lap_at(scaled, x).value
    rhs = r ** 0.8 * frac_lap_at(gaussian(p), r * x).value
    assert lhs == pytest.approx(rhs, rel=1e-10)


@pytest.mark.parametrize("d,a,y", [(2, 1.0, 1.5), (3, 0.5, 2.5)])
def test_kelvin_rule_for_exit_profile(d, a, y):
    p = StableParams(d, a)
    pt = np.zeros(d)
    pt[0] = y
    lhs = frac_lap_at(kelvin(exit_field(p)), pt).value
    rhs = y ** (-a - d) * frac_lap_at(exit_field(p), invert(pt)).value
    assert lhs == pytest.approx(rhs, rel=1e-7)


def test_not_smooth_and_validation():
    with pytest.raises(NotSmoothHere):
        frac_lap_at(exit_field(P21), np.array([1.0, 0.0]))
    with pytest.raises(NotSmoothHere):
        frac_lap_at(riesz_field(P21), np.zeros(2))
    with pytest.raises(InvalidParameters):
        frac_lap_at(exit_field(P21), np.zeros(3))
    grow = ScalarField(P21, lambda y: np.sum(y * y, axis=-1), growth=2.0)
    with pytest.raises(InvalidParameters):
        frac_lap_at(grow, np.zeros(2))
    with pytest.raises(InvalidParameters):
        frac_lap_at(exit_field(StableParams(4, 1.0)), np.zeros(4))


def test_cylinder_identity_off_centre():
    f = cylinder_field(P21, 0.05)
    for y in (0.0, 0.03):
        assert frac_lap_at(f, np.array([y, -1.0])).value == pytest.approx(-1.0, abs=1e-6)
