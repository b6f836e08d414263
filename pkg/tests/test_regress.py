import collections
import json
import math

import numpy as np
import pytest
from scipy import optimize

from cavs.avar import vhat
from cavs.core import INF, Sample, lgamma_center
from cavs.distributions import SeededRng, sample
from cavs.regress import DesignMatrix, cavs_regress, lgamma_regress, vhat_regress
from cavs.selector import CavsConfig, cavs_estimate


def design(rng, n, d):
    return np.c_[np.ones(n), rng.standard_normal((n, d - 1))]


def uniform_problem(seed, n=400, d=3, dist="uniform"):
    r = SeededRng(seed, "regress-fixture", seed)
    X = np.c_[np.ones(n), r.generator(3).standard_normal((n, d - 1))]
    beta0 = np.array([1.0, -2.0, 0.5])[:d]
    return X, X @ beta0 + sample(dist, n, r).values


class TestDesign:
    def test_invariants(self, rng):
        D = DesignMatrix(design(rng, 60, 4))
        assert np.allclose(D.sigma, D.sigma.T, atol=1e-12)
        assert np.all(D.eigenvalues >= 0)
        err = np.linalg.norm(D.sqrt_sigma @ D.sqrt_sigma - D.sigma) / np.linalg.norm(D.sigma)
        assert err <= 1e-8

    def test_rank_deficient(self, rng):
        X = design(rng, 30, 2)
        with pytest.raises(ValueError, match="rank"):
            DesignMatrix(np.c_[X, 2 * X[:, 1]])

    def test_shape_checks(self):
        with pytest.raises(ValueError):
            DesignMatrix(np.ones((2, 3)))
        with pytest.raises(ValueError):
            DesignMatrix([[1.0, math.nan], [1.0, 2.0], [1.0, 3.0]])

    def test_vector_becomes_column(self):
        assert DesignMatrix(np.ones(5)).d == 1


class TestFit:
    def test_ols(self, rng):
        X = design(rng, 80, 3)
        y = rng.standard_normal(80)
        ref = np.linalg.solve(X.T @ X, X.T @ y)
        assert np.allclose(lgamma_regress(X, y, 2), ref, atol=1e-8)

    @pytest.mark.parametrize("g", [2, 3, 4, 8, 64, 512, "inf"])
    def test_intercept_only_reduction(self, g, rng):
        y = rng.uniform(-1, 1, 70) * 4 + 10
        X = np.ones((70, 1))
        assert lgamma_regress(X, y, g)[0] == pytest.approx(lgamma_center(y, g), abs=1e-9)
        assert vhat_regress(X, y, g).value == pytest.approx(vhat(y, g).value, rel=1e-9, abs=1e-300)

    def test_derivative_free_oracle(self):
        r = np.random.default_rng(50)
        X = design(r, 50, 2)
        y = X @ [0.3, -1.2] + r.uniform(-1, 1, 50)
        f = lambda b: np.mean(np.abs(y - X @ b) ** 8)
        ref = optimize.minimize(f, np.zeros(2), method="Nelder-Mead",
                                options={"xatol": 1e-12, "fatol": 1e-22, "maxiter": 20000}).x
        assert np.allclose(lgamma_regress(X, y, 8), ref, atol=1e-6)

    def test_chebyshev_against_linear_program(self, rng):
        X = design(rng, 60, 3)
        y = X @ [1.0, 2.0, 3.0] + rng.uniform(-1, 1, 60)
        n, d = X.shape
        # minimise h subject to |y - X b| <= h
        c = np.r_[np.zeros(d), 1.0]
        A = np.r_[np.c_[-X, -np.ones(n)], np.c_[X, -np.ones(n)]]
        lp = optimize.linprog(c, A_ub=A, b_ub=np.r_[-y, y], bounds=[(None, None)] * d + [(0, None)],
                              method="highs")
        b = lgamma_regress(X, y, "inf")
        assert np.max(np.abs(y - X @ b)) == pytest.approx(lp.x[-1], rel=1e-8)

    def test_exact_fit(self, rng):
        X = design(rng, 20, 2)
        y = X @ [1.0, 2.0]
        assert np.allclose(lgamma_regress(X, y, 8), [1.0, 2.0])
        assert vhat_regress(X, y, 4).value < 1e-25

    def test_length_mismatch(self, rng):
        with pytest.raises(ValueError):
            lgamma_regress(design(rng, 10, 2), np.zeros(9), 4)


class TestVhat:
    def test_power_two_is_residual_variance(self, rng):
        X = design(rng, 90, 3)
        y = X @ [1.0, 0.0, -1.0] + rng.standard_normal(90)
        beta, *_ = np.linalg.lstsq(X, y, rcond=None)
        assert vhat_regress(X, y, 2).value == pytest.approx(np.mean((y - X @ beta) ** 2), rel=1e-10)

    def test_infinity_is_zero(self, rng):
        X = design(rng, 30, 2)
        assert vhat_regress(X, rng.standard_normal(30), INF).value == 0.0


class TestSelection:
    def test_unit_design_matches_location(self, rng):
        for _ in range(5):
            y = rng.uniform(-1, 1, 150)
            a = cavs_regress(np.ones((150, 1)), y)
            b = cavs_estimate(y)
            assert a.gamma_hat == b.gamma_hat and a.gamma_max == b.gamma_max
            assert a.beta_hat[0] == pytest.approx(b.theta_hat, abs=1e-9)

    @pytest.mark.parametrize("dist", ["uniform", "gaussian", "semicircle"])
    @pytest.mark.parametrize("tau", [0.5, 1.0, 2.0])
    def test_ols_containment(self, dist, tau):
        for seed in range(4):
            X, y = uniform_problem(seed, n=200, dist=dist)
            D = DesignMatrix(X)
            r = cavs_regress(D, y, CavsConfig(tau=tau))
            v2 = vhat_regress(D, y, 2).value
            gap = np.max(np.abs(D.sqrt_sigma @ (r.beta_hat - r.beta_ols)))
            assert gap <= 2 * tau * math.sqrt(v2 / D.n) + 1e-9
            assert r.gamma_hat <= r.gamma_max
            assert all(np.all(d.low <= d.high) for d in r.diagnostics)

    def test_equivariance(self):
        X, y = uniform_problem(3, n=200)
        b, c = 3.5, np.array([2.0, -1.0, 0.25])
        r1 = cavs_regress(X, y)
        r2 = cavs_regress(X, b * y + X @ c)
        assert r1.gamma_hat == r2.gamma_hat
        assert np.allclose(r2.beta_hat, b * r1.beta_hat + c, rtol=1e-7, atol=1e-7 * b)

    def test_uniform_fixture_selects_above_two(self, fixtures_dir):
        golden = json.loads((fixtures_dir / "golden_stats.json").read_text())["regress_uniform_gamma_gt_2"]
        hits = sum(cavs_regress(*uniform_problem(s)).gamma_hat.value > 2 for s in range(100))
        p = hits / 100
        assert p >= 0.9
        se = math.sqrt(golden["se"] ** 2 + max(p * (1 - p), 0.01) / 100)
        assert abs(p - golden["value"]) <= 3 * se

    def test_gaussian_fixture_mode_is_two(self):
        picks = collections.Counter(
            str(cavs_regress(*uniform_problem(s, dist="gaussian")).gamma_hat) for s in range(60)
        )
        assert picks.most_common(1)[0][0] == "2"

    def test_as_dict(self):
        r = cavs_regress(*uniform_problem(1, n=100))
        d = r.as_dict()
        assert d["gamma_hat"] == str(r.gamma_hat) and len(d["beta_hat"]) == 3
