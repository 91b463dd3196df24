import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from nhpp_decay.intensity import (
    IntegratedOverflowError,
    IntensityParams,
    cumulative_intensity,
    intensity_at,
    inverse_cumulative,
)

rates = st.floats(min_value=1e-3, max_value=1e2)
decays = st.one_of(st.just(0.0), st.floats(min_value=1e-4, max_value=1e2))
times = st.floats(min_value=0.0, max_value=1e4)


@pytest.mark.parametrize("a, b", [(-1.0, 1.0), (1.0, 0.0), (1.0, -2.0), (float("nan"), 1.0), (1.0, float("inf"))])
def test_params_reject_invalid(a, b):
    with pytest.raises(ValueError):
        IntensityParams(a, b)


def test_zero_decay_is_homogeneous():
    assert IntensityParams(0.0, 1.0).homogeneous
    assert not IntensityParams(1e-12, 1.0).homogeneous


@pytest.mark.parametrize("a, b, t, expected", [(0, 2, 5, 2.0), (1, 1, 0, 1.0), (1, 3, 2, 1.0)])
def test_intensity_examples(a, b, t, expected):
    assert intensity_at(IntensityParams(a, b), t) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize(
    "a, b, t, expected",
    [(0, 2, 3, 6.0), (1, 1, math.e - 1, 1.0), (2, 4, (math.e - 1) / 2, 2.0)],
)
def test_cumulative_examples(a, b, t, expected):
    assert cumulative_intensity(IntensityParams(a, b), t) == pytest.approx(expected, rel=1e-14)


def test_inverse_examples():
    assert inverse_cumulative(IntensityParams(0, 2), 6) == pytest.approx(3.0, rel=1e-15)
    assert inverse_cumulative(IntensityParams(1, 1), 1) == pytest.approx(math.e - 1, rel=1e-15)
    p = IntensityParams(0.3, 1.7)
    assert inverse_cumulative(p, cumulative_intensity(p, 7.3)) == pytest.approx(7.3, rel=1e-14)


def test_negative_arguments_rejected():
    p = IntensityParams(1.0, 1.0)
    for fn in (intensity_at, cumulative_intensity, inverse_cumulative):
        with pytest.raises(ValueError):
            fn(p, -1e-9)
        with pytest.raises(ValueError):
            fn(p, np.array([1.0, -1.0]))


def test_inverse_overflow_is_an_error_not_inf():
    p = IntensityParams(1.0, 1.0)
    with pytest.raises(IntegratedOverflowError):
        inverse_cumulative(p, 710.0)
    # small a pushes the limit of representable times lower
    with pytest.raises(IntegratedOverflowError):
        inverse_cumulative(IntensityParams(1e-3, 1.0), 705e3)
    assert np.isfinite(inverse_cumulative(p, 700.0))


def test_vectorised_and_scalar_outputs():
    p = IntensityParams(0.5, 2.0)
    t = np.array([0.0, 1.0, 10.0])
    assert isinstance(intensity_at(p, 1.0), float)
    np.testing.assert_allclose(intensity_at(p, t), 2.0 / (0.5 * t + 1))
    np.testing.assert_allclose(inverse_cumulative(p, cumulative_intensity(p, t)), t, rtol=1e-14)


@given(decays, rates, times, times)
def test_intensity_non_increasing(a, b, t1, t2):
    p = IntensityParams(a, b)
    lo, hi = sorted((t1, t2))
    assert intensity_at(p, hi) <= intensity_at(p, lo)
    if a > 0 and a * (hi - lo) > 1e-9 * (a * lo + 1):
        assert intensity_at(p, hi) < intensity_at(p, lo)


@given(decays, rates, times)
def test_roundtrip(a, b, t):
    p = IntensityParams(a, b)
    assert abs(inverse_cumulative(p, cumulative_intensity(p, t)) - t) <= 1e-9 * (1 + t)


@settings(max_examples=50)
@given(decays, rates, st.floats(min_value=1e-3, max_value=1e3))
def test_cumulative_is_integral_of_intensity(a, b, t):
    p = IntensityParams(a, b)
    numeric, _ = integrate.quad(lambda s: intensity_at(p, s), 0.0, t, epsabs=0, epsrel=1e-12, limit=200)
    big = cumulative_intensity(p, t)
    assert abs(big - numeric) <= 1e-8 * big


@given(rates, st.floats(min_value=1e-3, max_value=1e3))
def test_small_decay_limit(b, t):
    p = IntensityParams(1e-10, b)
    assert abs(cumulative_intensity(p, t) - b * t) <= 1e-6 * b * t
