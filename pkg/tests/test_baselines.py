import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from hypothesis.extra.numpy import arrays

from cavs.baselines import EULER_GAMMA, boundary_threshold, gg_mle_select, holdout_cv_select, l_n
from cavs.core import INF, Power, Sample
from cavs.distributions import SeededRng, sample
from cavs.harness import cv_limit_probability
from cavs.selector import CandidateGrid
from cavs.special import log_gamma


class TestProfile:
    def test_two_point_closed_form(self):
        assert l_n([-1.0, 1.0], 2) == pytest.approx((1 + math.log(2)) / 2 + math.log(math.sqrt(math.pi) / 2),
                                                    abs=1e-12)
        assert l_n([-1.0, 1.0], INF) == 0.0

    def test_infinity_is_log_half_range(self, rng):
        y = rng.standard_normal(30)
        assert l_n(y, INF) == math.log((y.max() - y.min()) / 2)

    def test_constant_sentinel(self):
        assert l_n([1.0, 1.0], 4) == -math.inf

    def test_population_limit_uniform(self):
        pop = 0.25 * math.log(1 / 5) + (1 + math.log(4)) / 4 + log_gamma(1.25)
        # at n = 1e4 the Monte-Carlo sd of L_n(4) is about 0.0034, so use 3 sd there
        y = sample("uniform", 10000, SeededRng(4, "ln-pop"))
        assert l_n(y, 4) == pytest.approx(pop, abs=0.0102)
        y = sample("uniform", 1000000, SeededRng(4, "ln-pop"))
        assert l_n(y, 4) == pytest.approx(pop, rel=0.02)

    @given(arrays(np.float64, st.integers(3, 40), elements=st.floats(-100, 100)),
           st.floats(0.01, 100), st.floats(-100, 100))
    def test_affine_shift(self, y, b, a):
        s = Sample(y)
        # keep the spread resolvable after the shift
        assume(s.range > 1e-6 * (np.max(np.abs(y)) + abs(a) / b))
        grid = CandidateGrid((2.0, 3.0, 4.0, 8.0, math.inf))
        p1 = gg_mle_select(s, grid)
        p2 = gg_mle_select(s.affine(b, a), grid)
        for p in grid:
            assert p2.values[p] == pytest.approx(p1.values[p] + math.log(b), abs=1e-8)
        # selections agree unless two profile values are within rounding of each other
        vals = sorted(p1.values.values())
        if vals[1] - vals[0] > 1e-7:
            assert p1.selected == p2.selected

    def test_recovers_gg_shape(self):
        y = sample("gg:shape=3", 10000, SeededRng(6, "gg-shape"))
        grid = CandidateGrid((2.0, 2.5, 3.0, 3.5, 4.0, 5.0, math.inf))
        assert gg_mle_select(y, grid).selected.value in (2.5, 3.0, 3.5)

    def test_uniform_infinity_wins(self):
        for seed in range(5):
            y = sample("uniform", 10000, SeededRng(seed, "mle-unif"))
            prof = gg_mle_select(y, CandidateGrid.default(10000))
            assert prof.selected == INF and prof.l_inf < prof.min_finite()

    def test_truncated_gaussian_finite(self):
        for seed in range(5):
            y = sample("tgauss-raw:t=2", 10000, SeededRng(seed, "mle-tg"))
            assert not gg_mle_select(y, CandidateGrid.default(10000)).selected.is_inf

    def test_ties_to_smallest(self):
        prof = gg_mle_select([3.0, 3.0, 3.0], CandidateGrid.default(3))
        assert prof.selected == Power(2)


class TestThreshold:
    def test_values(self):
        base = math.exp(EULER_GAMMA - 1) / 2
        assert boundary_threshold(1.0) == pytest.approx(0.327610, abs=1e-6)
        assert boundary_threshold(1.0) == base
        assert boundary_threshold(2.0) == pytest.approx(base / 2)
        assert boundary_threshold(0.5) == pytest.approx(2 * base)

    def test_domain(self):
        with pytest.raises(ValueError):
            boundary_threshold(0.0)

    def test_classifies_families(self):
        from cavs.distributions import boundary_density

        assert boundary_density("uniform") > boundary_threshold(1.0)
        assert boundary_density("tgauss-raw:t=2") < boundary_threshold(2.0)


class TestHoldout:
    def test_symmetric_tie(self):
        assert holdout_cv_select([-1.0, 0.0, 1.0], [-1.0, 0.0, 1.0]) == INF

    def test_coinciding_estimators(self):
        assert holdout_cv_select([0.0, 2.0], [0.0, 0.0, 3.0]) == INF

    def test_selects_two(self):
        # train mean 1, midrange 1.5; test mean 1
        assert holdout_cv_select([0.0, 0.0, 3.0], [1.0]) == Power(2)

    def test_deterministic(self, rng):
        a, b = rng.uniform(size=50), rng.uniform(size=50)
        assert holdout_cv_select(a, b) == holdout_cv_select(a, b)

    def test_frequency_near_gaussian_limit(self):
        hits = 0
        trials = 300
        for s in range(trials):
            tr = sample("uniform", 1000, SeededRng(s, "cv-unit/train"))
            te = sample("uniform", 1000, SeededRng(s, "cv-unit/test"))
            hits += holdout_cv_select(tr, te) == Power(2)
        p = hits / trials
        assert abs(p - cv_limit_probability()) <= 3 * math.sqrt(0.25 / trials)

    def test_limit_probability_oracle(self):
        g = np.random.default_rng(0)
        w = g.normal(0, math.sqrt(1 / 3), (2, 400000))
        mc = np.mean(np.abs(w[0] - w[1]) < np.abs(w[1]))
        assert cv_limit_probability() == pytest.approx(mc, abs=0.004)
