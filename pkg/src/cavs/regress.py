"""L_gamma linear regression and its power selector.

Coefficients for each candidate power come from a damped Newton method on the
rescaled response. Candidates are compared through rectangles on
``Sigma_X^{1/2} beta`` whose half-width ``tau * sqrt(V^/n)`` is shared by every
coordinate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np
from scipy import optimize

from .avar import VhatValue
from .core import DEFAULT_SOLVER, INF, ConvergenceError, Power, SolverConfig, as_power
from .selector import CavsConfig, CandidateGrid, feasible_prefix_mask, half_width, select_min_vhat

__all__ = [
    "DesignMatrix",
    "RegressionDiagnostic",
    "RegressionResult",
    "cavs_regress",
    "lgamma_regress",
    "vhat_regress",
]

# stand-in finite power for the minimax fit before active-set polishing
CAP_FACTOR = 64


class DesignMatrix:
    """Design ``X`` (n x d) with cached ``Sigma_X = X'X/n`` and its PSD root."""

    def __init__(self, X):
        X = np.array(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
            raise ValueError("design must be a nonempty 2-D array")
        if not np.all(np.isfinite(X)):
            raise ValueError("design entries must be finite")
        n, d = X.shape
        if n < d:
            raise ValueError(f"need n >= d, got n={n}, d={d}")
        X.setflags(write=False)
        self.X = X
        self.n, self.d = n, d
        sigma = X.T @ X / n
        sigma = (sigma + sigma.T) / 2
        w, V = np.linalg.eigh(sigma)
        w = np.clip(w, 0.0, None)
        if w[-1] <= 0 or w[0] <= 1e-10 * w[-1]:
            raise ValueError("design is rank deficient")
        self.sigma = sigma
        self.sqrt_sigma = (V * np.sqrt(w)) @ V.T
        self.eigenvalues = w

    def __repr__(self):
        return f"DesignMatrix(n={self.n}, d={self.d})"


def _as_design(X) -> DesignMatrix:
    return X if isinstance(X, DesignMatrix) else DesignMatrix(X)


def _log_mean_pow(r: np.ndarray, p: float) -> float:
    if p == 0:
        return 0.0
    a = np.abs(r)
    m = float(a.max())
    if m == 0.0:
        return -math.inf
    return p * math.log(m) + math.log(float(np.mean((a / m) ** p)))


def _ols(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    return beta


def _newton_regress(X, y, p, b0, cfg: SolverConfig) -> np.ndarray:
    """Damped Newton for ``min_b mean |y - X b|**p`` with ``p > 1``; y is O(1)."""
    d = X.shape[1]
    b = b0.copy()
    r = y - X @ b
    f = _log_mean_pow(r, p)
    tol = cfg.gradient_tolerance
    lam_rel = cfg.damping
    for _ in range(cfg.max_iterations):
        a = np.abs(r)
        m = float(a.max())
        if m == 0.0:
            return b
        u = a / m
        up1 = u ** (p - 1.0)
        # gradient and Hessian divided by p * m**(p-2) / n
        grad = -m * (X.T @ (np.sign(r) * up1))
        if p >= 2.0:
            w = u ** (p - 2.0)
        else:
            w = np.maximum(u, 1e-12) ** (p - 2.0)
        H = (p - 1.0) * (X.T * w) @ X
        gscale = m * float(up1 @ np.abs(X).sum(axis=1))
        # u**(p-1) carries relative rounding error of order p * eps
        gtol = max(tol, 4.0 * p * np.finfo(float).eps)
        if gscale == 0 or np.max(np.abs(grad)) <= gtol * gscale:
            return b
        lam = lam_rel * np.trace(H) / d
        t = 1.0
        accepted = False
        for _ in range(60):
            try:
                step = t * np.linalg.solve(H + lam * np.eye(d), grad)
            except np.linalg.LinAlgError:
                lam = max(lam * 2.0, 1e-300)
                continue
            b_new = b - step
            r_new = y - X @ b_new
            f_new = _log_mean_pow(r_new, p)
            if f_new <= f + 1e-15 * abs(f):
                accepted = True
                break
            # rejected: shorten the step and stiffen the damping
            t *= 0.5
            lam *= 2.0
        if not accepted:
            return b
        move = float(np.max(np.abs(X @ step)))
        b, r, f = b_new, r_new, f_new
        if move <= tol * 1e-3:
            return b
    raise ConvergenceError(
        f"regression Newton for power {p:g} did not converge in {cfg.max_iterations} steps",
        last_iterate=float(np.linalg.norm(b)),
        gradient=float("nan"),
    )


def _solve_power(X, ys, p, b0, cfg) -> np.ndarray:
    if p == 2.0:
        return _ols(X, ys)
    if p > 1.0:
        # continuation in the power keeps Newton inside its fast region
        b = b0
        q = 8.0
        while q < p:
            if q > 2.0:
                b = _newton_regress(X, ys, q, b, cfg)
            q *= 4.0
        return _newton_regress(X, ys, p, b, cfg)
    # p <= 1: nonsmooth/nonconvex; derivative-free search from OLS
    res = optimize.minimize(lambda b: _log_mean_pow(ys - X @ b, p), b0, method="Powell",
                            options={"xtol": 1e-10, "ftol": 1e-14, "maxiter": 20000})
    return np.asarray(res.x)


def _chebyshev_polish(X, ys, b):
    """Exact minimax fit from an approximate one by equioscillation on its active set."""
    n, d = X.shape
    r = ys - X @ b
    order = np.argsort(-np.abs(r), kind="stable")
    act = order[: d + 1]
    sgn = np.sign(r[act])
    sgn[sgn == 0] = 1.0
    A = np.hstack([X[act], sgn[:, None]])
    try:
        sol = np.linalg.solve(A, ys[act])
    except np.linalg.LinAlgError:
        return b
    b_new, h = sol[:d], abs(sol[d])
    r_new = ys - X @ b_new
    if np.max(np.abs(r_new)) <= h * (1 + 1e-12) + 1e-15 and h <= np.max(np.abs(r)) * (1 + 1e-12):
        return b_new
    return b


class _RegressionCache:
    def __init__(self, X: DesignMatrix, y, cfg: SolverConfig):
        self.D = X
        y = np.asarray(y, dtype=float).ravel()
        if y.size != X.n:
            raise ValueError("response length does not match design")
        if not np.all(np.isfinite(y)):
            raise ValueError("response must be finite")
        self.y = y
        self.cfg = cfg
        self.scale = float(np.max(np.abs(y - np.median(y))))
        self.ys = y / self.scale if self.scale > 0 else y
        self._ols = _ols(X.X, self.ys)
        self._store: Dict[float, tuple] = {}

    def solve(self, p: float) -> tuple:
        """Return ``(beta, log_min)`` for power ``p`` (``inf`` allowed)."""
        p = float(p)
        hit = self._store.get(p)
        if hit is not None:
            return hit
        X = self.D.X
        if p == 0:
            out = (self._ols * self.scale, 0.0)
        elif self.scale == 0 or np.max(np.abs(self.ys - X @ self._ols)) == 0.0:
            # exact fit exists: every power attains zero loss there
            out = (self._ols * self.scale, -math.inf)
        else:
            finite = [q for q in self._store if math.isfinite(q) and 1 < q < p]
            b0 = self._store[max(finite)][0] / self.scale if finite else self._ols
            if math.isinf(p):
                cap = CAP_FACTOR * self.D.n
                b = _solve_power(X, self.ys, cap, b0, self.cfg)
                b = _chebyshev_polish(X, self.ys, b)
                out = (b * self.scale, -math.inf)
            else:
                b = _solve_power(X, self.ys, p, b0, self.cfg)
                lm = _log_mean_pow(self.ys - X @ b, p) + p * math.log(self.scale)
                out = (b * self.scale, lm)
        self._store[p] = out
        return out

    def log_vhat(self, power: Power) -> float:
        if power.is_inf:
            return -math.inf
        g = power.value
        _, num = self.solve(2.0 * (g - 1.0))
        if num == -math.inf:
            return -math.inf
        _, den = self.solve(g - 2.0)
        return num - 2.0 * (math.log(g - 1.0) + den)


def lgamma_regress(X, y, power, cfg: SolverConfig = DEFAULT_SOLVER) -> np.ndarray:
    """Coefficients minimising ``sum |y_i - x_i' beta|**gamma``.

    ``gamma = 2`` is ordinary least squares. ``gamma = inf`` is the minimax
    (Chebyshev) fit: the power-``64 n`` solution, polished to the exact
    equioscillating fit on its ``d + 1`` largest residuals.
    """
    D = _as_design(X)
    return _RegressionCache(D, y, cfg).solve(as_power(power).value)[0]


def vhat_regress(X, y, power, cfg: SolverConfig = DEFAULT_SOLVER) -> VhatValue:
    """Estimated asymptotic variance of the L_gamma regression fit."""
    D = _as_design(X)
    p = as_power(power)
    return VhatValue(_RegressionCache(D, y, cfg).log_vhat(p), p)


@dataclass(frozen=True)
class RegressionDiagnostic:
    power: Power
    beta_hat: np.ndarray
    vhat: VhatValue
    low: np.ndarray
    high: np.ndarray
    within_gamma_max: bool


@dataclass(frozen=True)
class RegressionResult:
    beta_hat: np.ndarray
    gamma_hat: Power
    gamma_max: Power
    diagnostics: List[RegressionDiagnostic]
    beta_ols: np.ndarray
    tau: float
    n: int

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "tau": self.tau,
            "beta_hat": [float(v) for v in self.beta_hat],
            "beta_ols": [float(v) for v in self.beta_ols],
            "gamma_hat": str(self.gamma_hat),
            "gamma_max": str(self.gamma_max),
            "candidates": [
                {
                    "gamma": str(d.power),
                    "beta_hat": [float(v) for v in d.beta_hat],
                    "vhat": d.vhat.value,
                    "within_gamma_max": d.within_gamma_max,
                }
                for d in self.diagnostics
            ],
        }


def cavs_regress(X, y, cfg: CavsConfig = CavsConfig()) -> RegressionResult:
    """Select the power for an L_gamma regression and return its fit."""
    D = _as_design(X)
    cache = _RegressionCache(D, y, cfg.solver)
    n = D.n
    tau = cfg.tau_for(n)
    grid = cfg.grid_for(n)
    betas, logv = [], []
    for p in grid:
        try:
            betas.append(cache.solve(p.value)[0])
            logv.append(cache.log_vhat(p))
        except ConvergenceError as exc:
            raise ConvergenceError(f"power {p}: {exc}", exc.last_iterate, exc.gradient) from exc
    centers = np.array([D.sqrt_sigma @ b for b in betas])
    hw = np.array([half_width(lv, n, tau) for lv in logv])[:, None]
    lows, highs = centers - hw, centers + hw
    mask = feasible_prefix_mask(lows, highs)
    k_max = int(np.flatnonzero(mask)[-1])
    k_hat = select_min_vhat(logv, k_max)
    diags = [
        RegressionDiagnostic(p, b, VhatValue(lv, p), lo, hi, k <= k_max)
        for k, (p, b, lv, lo, hi) in enumerate(zip(grid, betas, logv, lows, highs))
    ]
    return RegressionResult(
        beta_hat=betas[k_hat],
        gamma_hat=grid.powers[k_hat],
        gamma_max=grid.powers[k_max],
        diagnostics=diags,
        beta_ols=cache.solve(2.0)[0],
        tau=tau,
        n=n,
    )
