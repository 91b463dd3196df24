import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from nhpp_decay.analytic import (
    QuadratureConfig,
    QuadratureError,
    cdf_Tn,
    density_Tn,
    distribution_Tn,
    eq8_approximation,
    survival_Tn,
    tail_exponent,
    upper_incomplete_gamma,
)
from nhpp_decay.intensity import IntensityParams
from nhpp_decay.validate import loglog_slope

TIGHT = QuadratureConfig(relative_tolerance=1e-12)

# (a, b, n, t) -> (survival, density) from a 30-digit mpmath evaluation of the
# Gamma-weighted expectation forms
REFERENCE = [
    ((0.7, 2.3, 3, 1.5), 0.32049134437909493, 0.18489169096467656),
    ((1.0, 0.0448, 2, 50.0), 0.99874701535049382, 1.3505432972359996e-5),
    ((0.5, 2.0, 5, 1e4), 2.5370943304676689e-10, 8.4633504770351767e-14),
    ((1.0, 1.0, 1, 1e6), 1.3815511557963774e-5, 1.2815512557962774e-11),
    ((2.0, 0.3, 4, 0.2), 0.99998294148196688, 8.3834248041834644e-5),
    ((0.05, 5.0, 8, 30.0), 1.512754574260798e-37, 2.8060702127170851e-37),
    ((3.0, 1.0, 170, 1e3), 1.0, 4.4647944971963866e-103),
]


def random_case(rng):
    a = 10 ** rng.uniform(-2, 1)
    b = 10 ** rng.uniform(-1.5, 1)
    return IntensityParams(a, b), int(rng.integers(1, 12)), 10 ** rng.uniform(-3, 6)


class TestQuadratureConfig:
    def test_defaults(self):
        q = QuadratureConfig()
        assert (q.node_count, q.relative_tolerance, q.max_refinements) == (64, 1e-8, 8)

    @pytest.mark.parametrize(
        "kwargs",
        [{"node_count": 7}, {"relative_tolerance": 0.0}, {"relative_tolerance": 2e-3}, {"max_refinements": 0}],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ValueError):
            QuadratureConfig(**kwargs)


class TestExamples:
    @pytest.mark.parametrize("a, b, n", [(1, 1, 1), (0.5, 2, 5), (0, 3, 2), (7, 0.1, 40)])
    def test_survival_at_zero(self, a, b, n):
        assert survival_Tn(IntensityParams(a, b), n, 0.0) == 1.0
        assert distribution_Tn(IntensityParams(a, b), n, 0.0) == 0.0

    def test_equal_rates_at_one(self):
        assert survival_Tn(IntensityParams(1, 1), 1, 1.0) == pytest.approx(math.log(2), rel=1e-12)

    def test_homogeneous_median(self):
        assert survival_Tn(IntensityParams(0, 1), 1, math.log(2)) == pytest.approx(0.5, rel=1e-15)

    def test_homogeneous_density(self):
        assert density_Tn(IntensityParams(0, 2), 1, 0.0) == 2.0

    def test_density_equal_rates_at_one(self):
        assert density_Tn(IntensityParams(1, 1), 1, 1.0) == pytest.approx(math.log(2) - 0.5, rel=1e-12)

    def test_density_matches_difference_quotient(self):
        p, h = IntensityParams(0.7, 2.3), 1e-4
        fd = (survival_Tn(p, 3, 1.5 - h, TIGHT) - survival_Tn(p, 3, 1.5 + h, TIGHT)) / (2 * h)
        assert fd == pytest.approx(density_Tn(p, 3, 1.5, TIGHT), rel=1e-4)

    @pytest.mark.parametrize("case, surv, dens", REFERENCE)
    def test_reference_values(self, case, surv, dens):
        a, b, n, t = case
        p = IntensityParams(a, b)
        assert survival_Tn(p, n, t) == pytest.approx(surv, rel=1e-10)
        assert density_Tn(p, n, t) == pytest.approx(dens, rel=1e-10)
        assert distribution_Tn(p, n, t) == pytest.approx(1.0 - surv, rel=1e-8, abs=1e-15)

    def test_arrays_keep_shape(self):
        p = IntensityParams(1, 1)
        t = np.array([[0.0, 1.0], [10.0, np.inf]])
        s = survival_Tn(p, 2, t)
        assert s.shape == (2, 2)
        assert s[0, 0] == 1.0 and s[1, 1] == 0.0
        assert isinstance(survival_Tn(p, 2, 1.0), float)

    @pytest.mark.parametrize("n, t", [(0, 1.0), (1.5, 1.0), (1, -1.0), (1, float("nan"))])
    def test_bad_arguments(self, n, t):
        with pytest.raises(ValueError):
            survival_Tn(IntensityParams(1, 1), n, t)

    def test_nonconvergence_reports_estimate(self):
        quad = QuadratureConfig(node_count=8, relative_tolerance=1e-15, max_refinements=1)
        p = IntensityParams(0.5, 2.0)
        with pytest.raises(QuadratureError) as info:
            survival_Tn(p, 5, 1e4, quad)
        err = info.value
        assert err.estimate == pytest.approx(2.5370943304676689e-10, rel=1e-3)
        assert 0 < err.error_bound < math.inf


class TestClosedForm:
    @pytest.mark.parametrize("a", [1.0, 0.3, 2.5])
    def test_equal_rates_single_event(self, a):
        t = np.logspace(-3, 6, 50)
        exact = np.log1p(a * t) / (a * t)
        np.testing.assert_allclose(survival_Tn(IntensityParams(a, a), 1, t), exact, rtol=1e-6)
        c = a * t
        dens = a * (np.log1p(c) / c**2 - 1.0 / (c * (1.0 + c)))
        np.testing.assert_allclose(density_Tn(IntensityParams(a, a), 1, t), dens, rtol=1e-6)

    def test_complement_at_small_t(self):
        # F(t) ~ t f(0) with f(0) = b (1 + a/b)^-n
        p = IntensityParams(1.0, 1.0)
        assert distribution_Tn(p, 1, 1e-10) == pytest.approx(0.5e-10, rel=1e-9)
        assert distribution_Tn(p, 3, 1e-10) == pytest.approx(0.125e-10, rel=1e-9)

    def test_cdf_callable(self):
        cdf = cdf_Tn(IntensityParams(1, 1), 1)
        np.testing.assert_allclose(cdf(np.array([1.0, 3.0])), 1 - np.log1p([1.0, 3.0]) / [1.0, 3.0], rtol=1e-10)


class TestProperties:
    @settings(max_examples=30, deadline=None)
    @given(
        st.floats(1e-3, 10.0),
        st.floats(1e-2, 10.0),
        st.integers(1, 20),
        st.lists(st.floats(0.0, 1e6), min_size=2, max_size=8),
    )
    def test_survival_bounded_and_monotone(self, a, b, n, ts):
        p = IntensityParams(a, b)
        t = np.sort(np.asarray(ts))
        s = survival_Tn(p, n, t)
        assert np.all((s >= 0) & (s <= 1))
        assert np.all(np.diff(s) <= 1e-12 * s[:-1])
        assert np.all(density_Tn(p, n, t) >= 0)

    def test_difference_quotient_random(self):
        rng = np.random.default_rng(3)
        worst, checked = 0.0, 0
        while checked < 40:
            p, n, t = random_case(rng)
            dens = density_Tn(p, n, t, TIGHT)
            if dens < 1e-300:
                continue
            h = 1e-4 * t
            if survival_Tn(p, n, t, TIGHT) <= 0.5:
                fd = (survival_Tn(p, n, t - h, TIGHT) - survival_Tn(p, n, t + h, TIGHT)) / (2 * h)
            else:
                fd = (distribution_Tn(p, n, t + h, TIGHT) - distribution_Tn(p, n, t - h, TIGHT)) / (2 * h)
            worst = max(worst, abs(fd / dens - 1.0))
            checked += 1
        assert worst <= 1e-4

    def test_survival_plus_distribution(self):
        rng = np.random.default_rng(5)
        for _ in range(40):
            p, n, t = random_case(rng)
            assert survival_Tn(p, n, t) + distribution_Tn(p, n, t) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("a, b, n", [(1.0, 1.0, 1), (0.5, 2.0, 2), (1.0, 0.3, 5), (2.0, 5.0, 3)])
    def test_normalisation(self, a, b, n):
        p = IntensityParams(a, b)
        edges = np.concatenate([[0.0], np.logspace(-4, 6, 21)])
        total = sum(
            integrate.quad(lambda x: density_Tn(p, n, x), lo, hi, epsabs=0, epsrel=1e-10, limit=100)[0]
            for lo, hi in zip(edges[:-1], edges[1:])
        )
        assert abs(total + survival_Tn(p, n, edges[-1]) - 1.0) <= 1e-6

    @pytest.mark.parametrize("b, n", [(1.0, 1), (3.0, 2), (0.5, 4)])
    def test_continuity_in_decay_rate(self, b, n):
        t = np.linspace(0.0, 10.0 / b, 41)
        s = survival_Tn(IntensityParams(1e-8, b), n, t)
        assert np.max(np.abs(s - np.exp(-b * t))) <= 1e-4

    @pytest.mark.parametrize("a, b", [(1.0, 1.0), (1.0, 0.5), (0.5, 2.0)])
    def test_tail_slope(self, a, b):
        p = IntensityParams(a, b)
        slope = loglog_slope(lambda t: density_Tn(p, 1, t))
        assert abs(slope + (b / a + 1.0)) <= 0.15

    def test_large_index(self):
        # beyond 170 the factorial would overflow; everything stays in log space
        p = IntensityParams(0.01, 1.0)
        s = survival_Tn(p, 400, np.array([1.0, 1e3, 1e6]))
        assert np.all(np.isfinite(s)) and np.all(np.diff(s) < 0)

    def test_agrees_with_arbitrary_precision(self):
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 30
        rng = np.random.default_rng(17)
        for _ in range(8):
            p, n, t = random_case(rng)
            k = p.a / p.b
            u_star = math.log(p.a * t) / k if p.a * t > 1 else 0.0
            nodes = sorted({0.0, u_star, u_star + 1.0, max(0.0, u_star - 1.0), n, 2.0 * n + 60})
            a, b, tt = mp.mpf(p.a), mp.mpf(p.b), mp.mpf(t)

            def surv(u):
                return u ** (n - 1) * mp.exp(-u) * (1 + a * tt * mp.exp(-k * u)) ** (-b / a)

            ref = mp.quad(surv, [mp.mpf(x) for x in nodes] + [mp.inf]) / mp.factorial(n - 1)
            if ref < mp.mpf("1e-300"):
                continue
            assert survival_Tn(p, n, t) == pytest.approx(float(ref), rel=1e-7)


class TestTailExponent:
    def test_examples(self):
        assert tail_exponent(IntensityParams(1, 1)).exponent == 2.0
        assert tail_exponent(IntensityParams(1, 0.0448)).exponent == pytest.approx(1.0448, rel=1e-15)
        homog = tail_exponent(IntensityParams(0, 5))
        assert homog.exponent is None and not homog.valid

    @given(st.floats(1e-6, 1e6), st.floats(1e-6, 1e6))
    def test_exceeds_one(self, a, b):
        assert tail_exponent(IntensityParams(a, b)).exponent > 1.0


class TestIncompleteGamma:
    def test_examples(self):
        assert upper_incomplete_gamma(1, 2.0) == pytest.approx(math.exp(-2), rel=1e-15)
        assert upper_incomplete_gamma(4, 0.0) == 6.0
        assert upper_incomplete_gamma(2, 1.0) == pytest.approx(2 / math.e, rel=1e-15)

    @pytest.mark.parametrize("n", [1, 3, 10, 30])
    @pytest.mark.parametrize("x", [0.1, 1.0, 7.5, 40.0])
    def test_against_regularised(self, n, x):
        ref = special.gammaincc(n, x) * special.gamma(n)
        assert upper_incomplete_gamma(n, x) == pytest.approx(ref, rel=1e-12)

    def test_domain(self):
        with pytest.raises(ValueError):
            upper_incomplete_gamma(0, 1.0)
        with pytest.raises(ValueError):
            upper_incomplete_gamma(2, -1.0)


class TestMeanValueForm:
    def test_slope_tends_to_exponent(self):
        p = IntensityParams(1.0, 1.0)
        slope = loglog_slope(lambda t: eq8_approximation(p, 1, t, truncation=10.0, xi=0.0))
        assert abs(slope + 2.0) <= 0.05

    def test_prefactor_at_origin(self):
        p = IntensityParams(0.5, 2.0)
        n, trunc = 3, 10.0
        gamma = p.b / p.a + 1
        rem = upper_incomplete_gamma(n, gamma * trunc) / math.factorial(n - 1)
        const = p.b ** (n + 1) / (p.a + p.b) ** n * (1 - rem)
        assert eq8_approximation(p, n, 0.0, truncation=trunc, xi=0.0) == pytest.approx(const, rel=1e-14)

    def test_preconditions(self):
        p = IntensityParams(1.0, 1.0)
        with pytest.raises(ValueError, match="truncation"):
            eq8_approximation(p, 5, 1.0, truncation=1.0, xi=0.0)
        with pytest.raises(ValueError):
            eq8_approximation(p, 1, 1.0, truncation=10.0, xi=11.0)
        with pytest.raises(ValueError):
            eq8_approximation(IntensityParams(0, 1), 1, 1.0, truncation=10.0, xi=0.0)

    def test_logarithmic_correction_is_visible(self):
        # exact t^2 f grows like ln t at a = b, n = 1; the mean-value form levels off
        p = IntensityParams(1.0, 1.0)
        t = np.array([1e4, 1e8])
        exact = t**2 * density_Tn(p, 1, t)
        approx = t**2 * eq8_approximation(p, 1, t, truncation=10.0, xi=0.0)
        assert exact[1] / exact[0] > 2.0
        assert approx[1] / approx[0] == pytest.approx(1.0, rel=1e-3)
