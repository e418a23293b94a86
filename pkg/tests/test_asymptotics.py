import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from martin_cone import (DegenerateFit, DomainError, InvalidParameters, StableParams, SweepRecord,
                         fit_power_law, martin_constant, predicted_beta, slit_check, slit_constant,
                         slit_reference)


def records(alpha, gap, thetas, noise=None):
    return [SweepRecord(t, alpha - gap(t), None, None, 64, 0.0, None, noise) for t in thetas]


def test_predicted_values():
    # B_{2,1} = 1/4 and d - 1 + alpha = 2
    assert predicted_beta(StableParams(2, 1.0), 0.1) == pytest.approx(0.9975, rel=1e-14)
    assert predicted_beta(StableParams(3, 1.0), 0.1) == pytest.approx(1 - 4 / (3 * math.pi ** 2) * 1e-3,
                                                                      rel=1e-14)
    assert predicted_beta(StableParams(3, 1.0), 0.1) == pytest.approx(0.99986491, abs=5e-9)
    assert predicted_beta(StableParams(2, 1.0), 1e-12) == pytest.approx(1.0, abs=1e-20)
    for bad in (0.0, 1.0):
        with pytest.raises(DomainError):
            predicted_beta(StableParams(2, 1.0), bad)


@given(st.sampled_from([2, 3, 4]), st.floats(0.05, 1.95), st.floats(0.001, 0.99), st.floats(0.001, 0.99))
def test_predicted_below_alpha_and_increasing_as_theta_shrinks(d, a, t1, t2):
    p = StableParams(d, a)
    lo, hi = sorted((t1, t2))
    assert predicted_beta(p, hi) < a
    assert predicted_beta(p, lo) >= predicted_beta(p, hi)


@given(st.sampled_from([2, 3, 5]), st.floats(0.1, 1.9), st.floats(0.01, 0.5))
def test_predicted_recomputable_from_record(d, a, t):
    p = StableParams(d, a)
    gap = a - predicted_beta(p, t)
    assert gap == pytest.approx(martin_constant(d, a) * t ** (d - 1 + a), rel=1e-12)


def test_exact_power_fit():
    fit = fit_power_law(records(1.0, lambda t: 0.25 * t ** 3, [0.1, 0.15, 0.2, 0.3, 0.4]), 1.0)
    assert fit.slope == pytest.approx(3.0, abs=1e-10)
    assert fit.constant == pytest.approx(0.25, rel=1e-10)
    assert fit.n_points == 5


@given(st.floats(0.5, 2.5), st.floats(0.5, 2.0))
def test_fit_exact_on_synthetic_power_laws(slope, c):
    # gaps stay above 3e-4, so storing beta = alpha - gap costs under 1e-12 relative
    thetas = [0.05, 0.08, 0.13, 0.21]
    fit = fit_power_law(records(1.0, lambda t: c * t ** slope, thetas), 1.0)
    assert fit.slope == pytest.approx(slope, rel=1e-10)
    assert fit.constant == pytest.approx(c, rel=1e-9)


def test_fit_errors():
    with pytest.raises(DegenerateFit):
        fit_power_law(records(1.0, lambda t: -t, [0.1, 0.2, 0.3, 0.4]), 1.0)
    with pytest.raises(InvalidParameters):
        fit_power_law(records(1.0, lambda t: t, [0.1, 0.2, 0.3]), 1.0)
    with pytest.raises(InvalidParameters):
        fit_power_law(records(1.0, lambda t: t, [0.1, 0.1, 0.3, 0.4]), 1.0)


def test_fit_drops_records_below_noise():
    good = records(1.0, lambda t: 0.25 * t ** 2, [0.1, 0.2, 0.3, 0.4], noise=1e-6)
    noisy = records(1.0, lambda t: 1e-5, [0.01], noise=1e-6)
    fit = fit_power_law(good + noisy, 1.0)
    assert fit.n_points == 4
    assert fit.slope == pytest.approx(2.0, abs=1e-10)


def test_slit_reference():
    assert slit_reference(0.2) == pytest.approx(0.99, rel=1e-15)
    assert slit_constant(2) == pytest.approx(0.25, rel=1e-14)


def test_slit_check_ratios():
    rep = slit_check([0.2, 0.1], nodes=64)
    assert rep.reference == pytest.approx([0.99, 0.9975], rel=1e-15)
    assert 0.85 <= rep.ratios[1] <= 1.15
    assert abs(rep.ratios[1] - 1) < abs(rep.ratios[0] - 1)
    with pytest.raises(DomainError):
        slit_check([0.6])
