"""Constrained asymptotic variance selection of the power gamma.

For every candidate power the L_gamma center and its estimated asymptotic
variance give an interval ``theta_g +/- tau * sqrt(V^(g) / n)``. ``gamma_max``
is the largest power whose prefix of intervals still has a common point, and
the selected power minimises ``V^`` over that prefix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Union

import numpy as np

from .avar import ObjectiveCache, VhatValue
from .core import (
    DEFAULT_SOLVER,
    INF,
    ConvergenceError,
    Power,
    Sample,
    SolverConfig,
    _as_sample,
    as_power,
)

__all__ = [
    "CandidateDiagnostic",
    "CandidateGrid",
    "CavsConfig",
    "CavsResult",
    "affine_transform_check",
    "cavs_estimate",
    "feasible_prefix_mask",
    "gamma_max",
    "parse_grid",
    "select_min_vhat",
]


@dataclass(frozen=True)
class CandidateGrid:
    """Strictly increasing candidate powers, optionally ending in infinity."""

    powers: tuple

    def __post_init__(self):
        ps = tuple(as_power(p) for p in self.powers)
        if not ps:
            raise ValueError("candidate grid is empty")
        for a, b in zip(ps, ps[1:]):
            if not a.value < b.value:
                raise ValueError("candidate grid must be strictly increasing")
        object.__setattr__(self, "powers", ps)

    @classmethod
    def default(cls, n: int, include_inf: bool = True) -> "CandidateGrid":
        """``{2, 4, 8, ..., <= n} + {inf}``; always contains 2."""
        ps = [2.0]
        k = 2
        while 2.0 ** k <= n:
            ps.append(2.0 ** k)
            k += 1
        if include_inf:
            ps.append(math.inf)
        return cls(tuple(ps))

    @property
    def sup(self) -> Power:
        return self.powers[-1]

    def __iter__(self):
        return iter(self.powers)

    def __len__(self) -> int:
        return len(self.powers)


def parse_grid(spec: Optional[str], n: int) -> CandidateGrid:
    """Parse a grid spec: ``"pow2:max=N,inf"``, ``"pow2"`` or ``"2,3,4,inf"``."""
    if spec is None or not spec.strip():
        return CandidateGrid.default(n)
    text = spec.strip().lower()
    if text.startswith("pow2"):
        parts = [p.strip() for p in text[4:].lstrip(":").split(",") if p.strip()]
        top = n
        inf = False
        for p in parts:
            if p.startswith("max="):
                top = int(float(p[4:]))
            elif p in ("inf", "infinity"):
                inf = True
            else:
                raise ValueError(f"bad grid component {p!r}")
        if not parts:
            inf = True
        return CandidateGrid.default(top, include_inf=inf)
    return CandidateGrid(tuple(as_power(p) for p in text.split(",") if p.strip()))


@dataclass(frozen=True)
class CavsConfig:
    """Selection settings.

    ``tau_policy`` is ``"fixed"`` (use ``tau``) or ``"sqrt-log-n"``. A grid of
    ``None`` means the default grid for the sample size.
    """

    tau: float = 1.0
    grid: Optional[CandidateGrid] = None
    solver: SolverConfig = DEFAULT_SOLVER
    tau_policy: str = "fixed"

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.tau_policy not in ("fixed", "sqrt-log-n"):
            raise ValueError(f"unknown tau policy {self.tau_policy!r}")

    def tau_for(self, n: int) -> float:
        if self.tau_policy == "sqrt-log-n":
            return math.sqrt(math.log(max(n, 3)))
        return self.tau

    def grid_for(self, n: int) -> CandidateGrid:
        return self.grid if self.grid is not None else CandidateGrid.default(n)


@dataclass(frozen=True)
class CandidateDiagnostic:
    power: Power
    theta_hat: float
    vhat: VhatValue
    interval_low: float
    interval_high: float
    within_gamma_max: bool = False

    @property
    def half_width(self) -> float:
        return (self.interval_high - self.interval_low) / 2


@dataclass(frozen=True)
class CavsResult:
    theta_hat: float
    gamma_hat: Power
    gamma_max: Power
    diagnostics: List[CandidateDiagnostic]
    sample_mean: float
    sample_variance: float
    tau: float
    n: int

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "tau": self.tau,
            "theta_hat": self.theta_hat,
            "gamma_hat": str(self.gamma_hat),
            "gamma_max": str(self.gamma_max),
            "sample_mean": self.sample_mean,
            "sample_variance": self.sample_variance,
            "candidates": [
                {
                    "gamma": str(d.power),
                    "theta_hat": d.theta_hat,
                    "vhat": d.vhat.value,
                    "log_vhat": d.vhat.log_value if math.isfinite(d.vhat.log_value) else None,
                    "interval_low": d.interval_low,
                    "interval_high": d.interval_high,
                    "within_gamma_max": d.within_gamma_max,
                }
                for d in self.diagnostics
            ],
        }


def half_width(log_vhat: float, n: int, tau: float) -> float:
    """``tau * sqrt(V^ / n)`` evaluated from ``log V^`` without underflow."""
    if log_vhat == -math.inf:
        return 0.0
    return math.exp(0.5 * (log_vhat - math.log(n)) + math.log(tau))


def feasible_prefix_mask(lows: Sequence[float], highs: Sequence[float]) -> np.ndarray:
    """``mask[k]`` is True when intervals ``0..k`` share a common point.

    ``lows``/``highs`` may be 1-D (intervals) or 2-D ``(k, d)`` (rectangles:
    every coordinate must overlap). The mask is downward closed.
    """
    lo = np.asarray(lows, dtype=float)
    hi = np.asarray(highs, dtype=float)
    if lo.ndim == 1:
        lo = lo[:, None]
        hi = hi[:, None]
    run_lo = np.maximum.accumulate(lo, axis=0)
    run_hi = np.minimum.accumulate(hi, axis=0)
    ok = np.all(run_lo <= run_hi, axis=1)
    # once empty, always empty
    return np.logical_and.accumulate(ok)


def gamma_max(diagnostics: Sequence[CandidateDiagnostic], grid: Optional[CandidateGrid] = None) -> Power:
    """Largest power whose prefix of intervals has a nonempty intersection."""
    if not diagnostics:
        raise ValueError("no candidates")
    mask = feasible_prefix_mask([d.interval_low for d in diagnostics], [d.interval_high for d in diagnostics])
    k = int(np.flatnonzero(mask)[-1]) if mask.any() else 0
    return diagnostics[k].power


def select_min_vhat(log_vhats: Sequence[float], k_max: int) -> int:
    """Index of the smallest ``log V^`` among ``0..k_max``; ties go to the smaller power."""
    best = 0
    for k in range(1, k_max + 1):
        if log_vhats[k] < log_vhats[best]:
            best = k
    return best


def cavs_estimate(sample, cfg: CavsConfig = CavsConfig()) -> CavsResult:
    """Run the selector on a univariate sample.

    Parameters
    ----------
    sample : Sample or array_like
    cfg : CavsConfig

    Returns
    -------
    CavsResult
    """
    s = _as_sample(sample)
    n = s.n
    tau = cfg.tau_for(n)
    grid = cfg.grid_for(n)
    if s.is_constant:
        diags = [
            CandidateDiagnostic(p, s.min, VhatValue(-math.inf, p), s.min, s.min, True)
            for p in grid
        ]
        return CavsResult(s.min, grid.powers[0], grid.sup, diags, s.mean, 0.0, tau, n)

    cache = ObjectiveCache(s, cfg.solver)
    thetas, logv = [], []
    for p in grid:
        try:
            if p.value == 2.0:
                th = s.mean
            else:
                th = cache.center(p)
            lv = cache.log_vhat(p)
        except ConvergenceError as exc:
            raise ConvergenceError(f"power {p}: {exc}", exc.last_iterate, exc.gradient) from exc
        thetas.append(th)
        logv.append(lv)

    hws = [half_width(lv, n, tau) for lv in logv]
    lows = [t - h for t, h in zip(thetas, hws)]
    highs = [t + h for t, h in zip(thetas, hws)]
    mask = feasible_prefix_mask(lows, highs)
    k_max = int(np.flatnonzero(mask)[-1])
    k_hat = select_min_vhat(logv, k_max)
    diags = [
        CandidateDiagnostic(p, th, VhatValue(lv, p), lo, hi, k <= k_max)
        for k, (p, th, lv, lo, hi) in enumerate(zip(grid, thetas, logv, lows, highs))
    ]
    return CavsResult(
        theta_hat=thetas[k_hat],
        gamma_hat=grid.powers[k_hat],
        gamma_max=grid.powers[k_max],
        diagnostics=diags,
        sample_mean=s.mean,
        sample_variance=s.variance,
        tau=tau,
        n=n,
    )


def affine_transform_check(sample, cfg: CavsConfig, a: float, b: float):
    """Run the selector on ``y`` and ``b*y + a``.

    Returns ``(gamma_hat, theta_hat, gamma_tilde, theta_tilde)``; the selected
    power should agree and ``theta_tilde`` should equal ``b*theta_hat + a``.
    """
    if not b > 0:
        raise ValueError("scale must be positive")
    s = _as_sample(sample)
    r1 = cavs_estimate(s, cfg)
    r2 = cavs_estimate(s.affine(b, a), cfg)
    return r1.gamma_hat, r1.theta_hat, r2.gamma_hat, r2.theta_hat
