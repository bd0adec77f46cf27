import math
import numpy as np
import pytest

from ssat_cbf.smoothmath import NUM_AXES, SmoothAbs, SmoothingParams, SmoothMax, smooth_abs, smooth_max


@pytest.mark.parametrize("alpha", [1.0, 10.0, 100.0])
def test_lse_overestimates_max_by_at_most_log_n(rng, alpha):
    for _ in range(20):
        x = rng.normal(0.0, 2.0, 15)
        value, _, _ = smooth_max(x, SmoothMax.LSE, alpha)
        assert 0.0 <= value - x.max() <= math.log(x.size) / alpha + 1e-12


def test_lse_of_equal_entries():
    value, grad, _ = smooth_max([2.0, 2.0, 2.0, 2.0], SmoothMax.LSE, alpha=50.0)
    assert value == pytest.approx(2.0 + math.log(4) / 50.0)
    np.testing.assert_allclose(grad, 0.25)


def test_lse_does_not_overflow_for_large_inputs():
    value, grad, hess = smooth_max([1e3, 1e3 - 1.0], SmoothMax.LSE, alpha=1e3)
    assert math.isfinite(value)
    assert np.all(np.isfinite(grad)) and np.all(np.isfinite(hess))
    assert value == pytest.approx(1e3, abs=1e-3)


def test_boltzmann_stays_between_min_and_max(rng):
    for _ in range(20):
        x = rng.normal(0.0, 1.0, 7)
        value, _, _ = smooth_max(x, SmoothMax.BOLTZMANN, alpha=5.0)
        assert x.min() - 1e-12 <= value <= x.max() + 1e-12


@pytest.mark.parametrize("variant", [SmoothMax.LSE, SmoothMax.BOLTZMANN])
def test_smooth_max_derivatives_match_finite_differences(rng, central_gradient, central_jacobian, variant):
    x = rng.normal(0.0, 0.3, 6)
    _, grad, hess = smooth_max(x, variant, alpha=8.0)
    np.testing.assert_allclose(grad, central_gradient(lambda v: smooth_max(v, variant, 8.0)[0], x), atol=1e-7)
    np.testing.assert_allclose(hess, central_jacobian(lambda v: smooth_max(v, variant, 8.0)[1], x), atol=1e-6)
    np.testing.assert_allclose(hess, hess.T, atol=1e-12)


def test_lse_gradient_is_a_probability_vector(rng):
    _, grad, _ = smooth_max(rng.normal(size=15), SmoothMax.LSE, alpha=3.0)
    assert np.all(grad >= 0)
    assert grad.sum() == pytest.approx(1.0)


@pytest.mark.parametrize("values", [[], [1.0, math.nan], [math.inf]])
def test_smooth_max_rejects_bad_values(values):
    with pytest.raises(ValueError):
        smooth_max(values)


@pytest.mark.parametrize("alpha", [0.0, -1.0, math.inf])
def test_smooth_max_rejects_bad_alpha(alpha):
    with pytest.raises(ValueError):
        smooth_max([1.0, 2.0], alpha=alpha)


def test_xtanh_underestimates_abs_by_less_than_inverse_alpha():
    x = np.linspace(-1.0, 1.0, 2001)
    value, _, _ = smooth_abs(x, SmoothAbs.XTANH, 100.0)
    gap = np.abs(x) - value
    assert np.all(gap >= 0.0)
    assert np.all(gap < 1.0 / 100.0)


def test_sqrt_never_underestimates_abs():
    x = np.linspace(-1.0, 1.0, 2001)
    value, _, _ = smooth_abs(x, SmoothAbs.SQRT, 0.01)
    assert np.all(value >= np.abs(x))
    assert np.max(value - np.abs(x)) == pytest.approx(0.01)


@pytest.mark.parametrize("variant,param", [(SmoothAbs.XTANH, 20.0), (SmoothAbs.SQRT, 0.05)])
def test_smooth_abs_derivatives(variant, param):
    x = np.linspace(-0.4, 0.4, 41)
    eps = 1e-6
    value, d1, d2 = smooth_abs(x, variant, param)
    plus, minus = smooth_abs(x + eps, variant, param), smooth_abs(x - eps, variant, param)
    np.testing.assert_allclose(d1, (plus[0] - minus[0]) / (2 * eps), atol=1e-7)
    np.testing.assert_allclose(d2, (plus[1] - minus[1]) / (2 * eps), atol=1e-5)


def test_smooth_abs_rejects_non_finite_input():
    with pytest.raises(ValueError):
        smooth_abs([0.0, math.nan])


def test_default_error_band():
    lower, upper = SmoothingParams().error_band()
    assert lower == pytest.approx(0.01)
    assert upper == pytest.approx(0.06 + math.log(NUM_AXES) / 100.0)


def test_boltzmann_error_band_is_one_sided():
    lower, upper = SmoothingParams(max_variant=SmoothMax.BOLTZMANN).error_band()
    assert lower == math.inf
    assert upper == pytest.approx(0.06)


def test_switch_threshold_must_exceed_smoothing_floor():
    with pytest.raises(ValueError, match="switch_threshold"):
        SmoothingParams(alpha_max=10.0, switch_threshold=0.5)
    assert SmoothingParams(alpha_max=10.0, switch_threshold=1.0).switch_threshold == 1.0


def test_variants_accept_strings():
    params = SmoothingParams(max_variant="boltzmann", abs_variant="sqrt")
    assert params.max_variant is SmoothMax.BOLTZMANN
    assert params.abs_variant is SmoothAbs.SQRT
    assert params.abs_param == params.eps_sqrt
