import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import special

from cavs.avar import (
    MomentTable,
    ObjectiveCache,
    VhatValue,
    log_moment_abs,
    moment_abs,
    moment_abs_quadrature,
    v_population,
    vhat,
)
from cavs.core import INF, Power, Sample
from cavs.distributions import SeededRng, parse_dist, sample, truncated_sigma


class TestVhat:
    def test_power_two_is_sample_variance(self, rng):
        y = rng.standard_normal(50)
        assert vhat(y, 2).value == pytest.approx(np.var(y), rel=1e-12)

    def test_infinity_is_zero(self, rng):
        v = vhat(rng.standard_normal(10), INF)
        assert v.value == 0.0 and v.log_value == -math.inf

    def test_constant_is_zero(self):
        assert vhat([1.0, 1.0, 1.0], 4).value == 0.0

    def test_two_step_oracle(self, rng):
        # independent minimisations with a bounded scalar search
        from scipy import optimize

        y = rng.uniform(-1, 1, 60)
        g = 5.0

        def m(p):
            return optimize.minimize_scalar(lambda t: np.mean(np.abs(y - t) ** p), bounds=(-1, 1),
                                            method="bounded", options={"xatol": 1e-12}).fun

        ref = m(2 * (g - 1)) / ((g - 1) * m(g - 2)) ** 2
        assert vhat(y, g).value == pytest.approx(ref, rel=1e-8)

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            vhat([1.0], 4)

    def test_infinity_guard(self):
        with pytest.raises(ValueError):
            VhatValue(0.0, INF)

    @given(arrays(np.float64, st.integers(2, 60), elements=st.floats(-100, 100)),
           st.sampled_from([3.0, 4.0, 8.0]), st.floats(0.01, 100), st.floats(-50, 50))
    def test_scales_quadratically(self, y, g, b, a):
        s = Sample(y)
        t = s.affine(b, a)
        # the shift must not round away the spread
        assume(not s.is_constant and t.range == pytest.approx(b * s.range, rel=1e-6))
        lv = vhat(s, g).log_value
        assert vhat(t, g).log_value == pytest.approx(lv + 2 * math.log(b), abs=1e-7)

    @pytest.mark.parametrize("g", [2.0, 4.0, 8.0])
    def test_consistent_for_uniform(self, g):
        y = sample("uniform", 20000, SeededRng(5, "avar-test"))
        assert vhat(y, g).value == pytest.approx(1 / (2 * g - 1), rel=0.05)

    def test_cache_warm_start_matches_cold(self, rng):
        y = Sample(rng.uniform(-1, 1, 300))
        warm = ObjectiveCache(y)
        cold = ObjectiveCache(y, warm_start=False)
        for p in (4.0, 30.0, 126.0, 510.0):
            assert warm(p)[0] == pytest.approx(cold(p)[0], abs=1e-9)


def gaussian_abs_moment(q):
    return 2 ** (q / 2) * math.gamma((q + 1) / 2) / math.sqrt(math.pi)


def semicircle_abs_moment(q):
    # (2/pi) B((q+1)/2, 3/2)
    return 2 / math.pi * special.beta((q + 1) / 2, 1.5)


class TestMoments:
    @pytest.mark.parametrize("q", [0.5, 1.0, 2.0, 3.0, 7.5, 40.0, 300.0])
    def test_uniform(self, q):
        assert moment_abs("uniform", q) == pytest.approx(1 / (q + 1), rel=1e-12)
        assert moment_abs_quadrature("uniform", q) == pytest.approx(1 / (q + 1), rel=1e-9)

    @pytest.mark.parametrize("q", [0.5, 2.0, 5.0, 33.0, 500.0])
    def test_semicircle_against_beta(self, q):
        assert moment_abs("semicircle", q) == pytest.approx(semicircle_abs_moment(q), rel=1e-9)

    @pytest.mark.parametrize("q", [1.0, 2.0, 3.5, 10.0, 60.0])
    def test_gaussian(self, q):
        assert moment_abs("gaussian", q) == pytest.approx(gaussian_abs_moment(q), rel=1e-9)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 3.0])
    @pytest.mark.parametrize("q", [1.0, 4.0, 64.0, 1024.0])
    def test_boundary_power_formula_vs_quadrature(self, alpha, q):
        d = parse_dist(f"boundary-power:alpha={alpha}")
        assert moment_abs(d, q) == pytest.approx(moment_abs_quadrature(d, q), rel=1e-9)

    @pytest.mark.parametrize("t", [1.0, 2.0, 2.5])
    @pytest.mark.parametrize("q", [1.0, 2.0, 6.0])
    def test_tgauss_against_mpmath(self, t, q):
        sig = truncated_sigma(t)
        mass = math.erf(t / math.sqrt(2))
        f = lambda w: abs(w) ** q * mpmath.npdf(w)
        ref = float(mpmath.quad(f, [-t, 0, t])) / mass * sig ** q
        assert moment_abs(f"tgauss:t={t}", q) == pytest.approx(ref, rel=1e-9)

    def test_tgauss_unit_variance(self):
        for t in (0.5, 1.0, 2.0, 3.0):
            assert moment_abs(f"tgauss:t={t}", 2.0) == pytest.approx(1.0, rel=1e-10)

    def test_gg_and_mixture(self):
        # gg with shape 2 and sigma 1: E|Z|^2 = Gamma(3/2)/Gamma(1/2) = 1/2
        assert moment_abs("gg:shape=2", 2.0) == pytest.approx(0.5, rel=1e-12)
        # (2/3)(1/3) + (1/3)(4/3) for the mixture second moment
        assert moment_abs("mixture", 2.0) == pytest.approx(2 / 9 + 4 / 9, rel=1e-12)

    def test_order_zero(self):
        assert moment_abs("semicircle", 0.0) == 1.0

    def test_negative_orders(self):
        assert math.exp(log_moment_abs("uniform", -0.5)) == pytest.approx(2.0, rel=1e-12)
        with pytest.raises(ValueError):
            log_moment_abs("uniform", -1.0)


class TestPopulationVariance:
    @pytest.mark.parametrize("g", [2.0, 3.0, 5.0, 10.0])
    def test_uniform_closed_form(self, g):
        assert v_population("uniform", g) == pytest.approx(1 / (2 * g - 1), rel=1e-12)

    def test_gaussian_at_two(self):
        assert v_population("gaussian", 2.0) == pytest.approx(1.0, rel=1e-10)

    def test_rademacher(self):
        assert v_population("rademacher", 3.0) == pytest.approx(0.25)

    def test_uniform_decreasing(self):
        vals = [v_population("uniform", g) for g in (2, 4, 8, 16)]
        assert vals == sorted(vals, reverse=True)

    def test_domain(self):
        with pytest.raises(ValueError):
            v_population("uniform", 1.0)


class TestMomentTable:
    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
    def test_envelope_is_bounded(self, alpha):
        tab = MomentTable.build(f"boundary-power:alpha={alpha}", range(1, 1025))
        env = list(tab.envelope().values())
        assert max(env) / min(env) <= 10

    def test_lookup(self):
        tab = MomentTable.build("uniform", [3])
        assert tab[3] == pytest.approx(0.25)

    def test_envelope_needs_alpha(self):
        with pytest.raises(ValueError):
            MomentTable.build("gaussian", [2]).envelope()
