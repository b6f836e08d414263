"""Rival selectors: the generalized-Gaussian MLE profile and held-out CV.

The profile likelihood of the generalized Gaussian family, with location and
scale maximised out, is ``-n * L_n(gamma)`` up to a constant where

    L_n(g) = (1/g) log min_t mean|Y - t|**g + (1 + log g)/g + log Gamma(1 + 1/g)

and ``L_n(inf) = log(range / 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict

from .core import DEFAULT_SOLVER, INF, Power, SolverConfig, _as_sample, as_power, lgamma_center
from .avar import ObjectiveCache
from .selector import CandidateGrid
from .special import EULER_GAMMA, log_gamma

__all__ = [
    "EULER_GAMMA",
    "GgMleProfile",
    "boundary_threshold",
    "gg_mle_select",
    "holdout_cv_select",
    "l_n",
]


def _l_n_from(log_min: float, g: float) -> float:
    if log_min == -math.inf:
        return -math.inf
    return log_min / g + (1.0 + math.log(g)) / g + log_gamma(1.0 + 1.0 / g)


def l_n(sample, power, cfg: SolverConfig = DEFAULT_SOLVER) -> float:
    """Profiled negative log-likelihood per observation of the GG family.

    Returns ``-inf`` for a constant sample, where every power fits perfectly.
    """
    s = _as_sample(sample)
    if s.n < 2:
        raise ValueError("l_n needs at least two observations")
    p = as_power(power)
    if s.is_constant:
        return -math.inf
    if p.is_inf:
        return math.log(s.range / 2.0)
    return _l_n_from(ObjectiveCache(s, cfg)(p.value)[1], p.value)


@dataclass(frozen=True)
class GgMleProfile:
    values: Dict[Power, float]
    selected: Power

    @property
    def l_inf(self) -> float:
        return self.values.get(INF, math.nan)

    def min_finite(self) -> float:
        fin = [v for p, v in self.values.items() if not p.is_inf]
        return min(fin) if fin else math.inf


def gg_mle_select(sample, grid: CandidateGrid, cfg: SolverConfig = DEFAULT_SOLVER) -> GgMleProfile:
    """Evaluate ``L_n`` on the grid and pick its minimiser (ties: smallest power)."""
    s = _as_sample(sample)
    if s.n < 2:
        raise ValueError("gg_mle_select needs at least two observations")
    cache = ObjectiveCache(s, cfg)
    vals: Dict[Power, float] = {}
    for p in grid:
        if s.is_constant:
            vals[p] = -math.inf
        elif p.is_inf:
            vals[p] = math.log(s.range / 2.0)
        else:
            vals[p] = _l_n_from(cache(p.value)[1], p.value)
    best = grid.powers[0]
    for p in grid.powers[1:]:
        if vals[p] < vals[best]:
            best = p
    return GgMleProfile(vals, best)


def boundary_threshold(b: float) -> float:
    """Boundary density above which ``gamma = inf`` is a local minimum of the profile.

    Equals ``exp(gamma_E - 1) / (2 b)`` for support ``[-b, b]``.
    """
    if not b > 0:
        raise ValueError("support half-width must be positive")
    return math.exp(EULER_GAMMA - 1.0) / (2.0 * b)


def holdout_cv_select(train, test, cfg: SolverConfig = DEFAULT_SOLVER) -> Power:
    """Pick 2 or inf by squared error of the train-fit centers against the test mean.

    Selects 2 only when it is strictly better; ties go to infinity.
    """
    tr = _as_sample(train)
    te = _as_sample(test)
    th2 = tr.mean
    thinf = lgamma_center(tr, INF, cfg)
    e2 = (te.mean - th2) ** 2
    einf = (te.mean - thinf) ** 2
    return as_power(2.0) if e2 < einf else INF
