"""Asymptotic variance of L_gamma centers.

``vhat`` is the plug-in estimate

    V^(g) = min_t mean|Y - t|**(2(g-1)) / [(g-1) * min_t mean|Y - t|**(g-2)]**2

kept in log space end to end, and ``v_population`` is the same ratio built from
the absolute moments of a noise family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional

import numpy as np
from scipy import integrate

from .core import (
    DEFAULT_SOLVER,
    Power,
    Sample,
    SolverConfig,
    _as_sample,
    as_power,
    min_objective_log,
)
from .distributions import DistributionSpec, parse_dist, truncated_sigma
from .special import log_gamma

__all__ = [
    "MomentTable",
    "ObjectiveCache",
    "QuadratureError",
    "VhatValue",
    "log_moment_abs",
    "moment_abs",
    "moment_abs_quadrature",
    "v_population",
    "vhat",
]


class QuadratureError(ArithmeticError):
    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


@dataclass(frozen=True)
class VhatValue:
    log_value: float
    power: Power

    def __post_init__(self):
        if self.power.is_inf and self.log_value != -math.inf:
            raise ValueError("V^(inf) is defined as 0")

    @property
    def value(self) -> float:
        return math.exp(self.log_value) if self.log_value != -math.inf else 0.0


# ---------------------------------------------------------------------------
# Empirical side
# ---------------------------------------------------------------------------


class ObjectiveCache:
    """Memoised ``min_objective_log`` results for one sample.

    Successive powers warm-start from the nearest power solved so far.
    """

    def __init__(self, sample, cfg: SolverConfig = DEFAULT_SOLVER, warm_start: bool = True):
        self.sample = _as_sample(sample)
        self.cfg = cfg
        self.warm_start = warm_start
        self._store: Dict[float, tuple] = {}

    def __call__(self, p: float) -> tuple:
        p = float(p)
        hit = self._store.get(p)
        if hit is not None:
            return hit
        init = None
        if self.warm_start and p > 1 and self._store:
            near = min(self._store, key=lambda q: abs(math.log(max(q, 1e-300)) - math.log(p)))
            if near > 1:
                init = self._store[near][0]
        res = min_objective_log(self.sample, p, self.cfg, init=init)
        self._store[p] = res
        return res

    def center(self, power: Power) -> float:
        from .core import lgamma_center

        if power.is_inf:
            return lgamma_center(self.sample, power, self.cfg)
        return self(power.value)[0]

    def log_vhat(self, power: Power) -> float:
        if power.is_inf or self.sample.is_constant:
            return -math.inf
        g = power.value
        _, num = self(2.0 * (g - 1.0))
        _, den = self(g - 2.0)
        return num - 2.0 * (math.log(g - 1.0) + den)


def vhat(sample, power, cfg: SolverConfig = DEFAULT_SOLVER) -> VhatValue:
    """Empirical asymptotic variance of the L_gamma center.

    Returns ``V^ = 0`` (log ``-inf``) for ``gamma = inf`` and for constant
    samples. ``V^(2)`` is the divisor-``n`` sample variance.
    """
    s = _as_sample(sample)
    if s.n < 2:
        raise ValueError("vhat needs at least two observations")
    p = as_power(power)
    return VhatValue(ObjectiveCache(s, cfg).log_vhat(p), p)


# ---------------------------------------------------------------------------
# Population side
# ---------------------------------------------------------------------------


def _check(res, what):
    val, err = res[0], res[1]
    if not math.isfinite(val) or err > 1e-10 * abs(val) + 1e-300:
        raise QuadratureError(f"quadrature for {what} did not converge", err / abs(val) if val else math.inf)
    return val


def _log_quad_compact(q: float, log_density_mag, lead_power: float, top: float) -> float:
    """log of int_0^1 a**q * f(a) da where f(a) = density_mag(a) * (1 - a)**lead_power.

    The factor ``(1 - a)**lead_power`` (possibly singular) is handled by an
    algebraic endpoint weight on the last piece.
    """
    # split so the last piece covers the mass near a = 1 for large q
    c = max(0.5, 1.0 - 40.0 / max(q, 1.0))

    def smooth(a):
        if a > 0:
            return math.exp(q * math.log(a) + log_density_mag(a))
        return math.exp(log_density_mag(0.0)) if q == 0 else 0.0

    total = 0.0
    # near 0: a**q integrable singularity when q < 0
    if q < 0:
        head = integrate.quad(lambda a: math.exp(log_density_mag(a)) * (1 - a) ** lead_power, 0.0, 0.5,
                              weight="alg", wvar=(q, 0.0), limit=200, epsabs=0, epsrel=1e-12)
        total += _check(head, "moment head")
        lo = 0.5
    else:
        lo = 0.0
    if c > lo:
        mid = integrate.quad(lambda a: smooth(a) * (1 - a) ** lead_power, lo, c, limit=200, epsabs=0, epsrel=1e-12)
        total += mid[0]
    tail = integrate.quad(smooth, max(c, lo), 1.0, weight="alg", wvar=(0.0, lead_power),
                          limit=200, epsabs=0, epsrel=1e-12)
    total += _check(tail, "moment tail")
    return math.log(top) + math.log(total) if total > 0 else -math.inf


def moment_abs_quadrature(dist, q: float) -> float:
    """``E|Z|**q`` by adaptive quadrature (independent of any closed form)."""
    return math.exp(_log_moment_quad(parse_dist(dist), q))


def _log_moment_quad(dist: DistributionSpec, q: float) -> float:
    f = dist.family
    if f == "uniform":
        b = dist.param("b", 1.0)
        return q * math.log(b) + _log_quad_compact(q, lambda a: 0.0, 0.0, 1.0)
    if f in ("ushape", "boundary-power"):
        alpha = dist.alpha
        return _log_quad_compact(q, lambda a: 0.0, alpha - 1.0, alpha)
    if f == "semicircle":
        # |Z| density (4/pi) sqrt(1 - a^2) = (4/pi) sqrt(1 + a) * (1 - a)**0.5
        return _log_quad_compact(q, lambda a: 0.5 * math.log1p(a), 0.5, 4.0 / math.pi)
    if f == "tgauss":
        t = dist.param("t")
        scale = truncated_sigma(t) if dist.param("unitvar", True) else 1.0
        mass = math.erf(t / math.sqrt(2))
        # substitute w = t * a: int_0^t w^q phi(w) dw = t^(q+1) int_0^1 a^q phi(t a) da
        logphi = lambda a: -0.5 * (t * a) ** 2 - 0.5 * math.log(2 * math.pi)
        val = _log_quad_compact(q, logphi, 0.0, 2.0 * t / mass)
        return val + q * math.log(t * scale)
    if f == "gaussian":
        if q == 0:
            return 0.0
        peak = math.sqrt(q) if q > 0 else 0.0
        lpk = (q * math.log(peak) - 0.5 * peak * peak) if q > 0 else 0.0
        g = lambda w: math.exp(q * math.log(w) - 0.5 * w * w - lpk) if w > 0 else 0.0
        pts = [peak] if peak > 0 else None
        hi = peak + 40.0
        res = integrate.quad(g, 0.0, hi, points=pts, limit=400, epsabs=0, epsrel=1e-12)
        val = _check(res, "gaussian moment")
        return math.log(val) + lpk + math.log(2.0 / math.sqrt(2 * math.pi))
    return log_moment_abs(dist, q)


def log_moment_abs(dist, q: float) -> float:
    """``log E|Z|**q``, using closed forms where the family has one."""
    dist = parse_dist(dist)
    q = float(q)
    if not q > -1:
        raise ValueError(f"moment order must exceed -1, got {q}")
    if q == 0:
        return 0.0
    f = dist.family
    if f == "uniform":
        return q * math.log(dist.param("b", 1.0)) - math.log(q + 1.0)
    if f in ("ushape", "boundary-power"):
        a = dist.alpha
        return log_gamma(a + 1.0) + log_gamma(q + 1.0) - log_gamma(q + a + 1.0)
    if f == "rademacher":
        return 0.0
    if f == "gg":
        s = dist.param("shape")
        return q * math.log(dist.param("sigma", 1.0)) + log_gamma((q + 1.0) / s) - log_gamma(1.0 / s)
    if f == "mixture":
        return math.log((2.0 / 3.0 + (2.0 ** q) / 3.0) / (q + 1.0))
    if f in ("semicircle", "tgauss", "gaussian"):
        return _log_moment_quad(dist, q)
    raise NotImplementedError(f"no absolute moments for family {f!r}")


def moment_abs(dist, q: float) -> float:
    """``E|Z|**q`` for a noise family (``q >= 0``)."""
    if not q >= 0:
        raise ValueError("moment order must be >= 0")
    lm = log_moment_abs(dist, q)
    return math.exp(lm) if lm < 709.0 else math.inf


def v_population(dist, gamma: float) -> float:
    """Asymptotic variance ``E|Z|^(2(g-1)) / [(g-1) E|Z|^(g-2)]^2``.

    Returns ``inf`` when the numerator moment diverges or overflows.
    """
    gamma = float(gamma)
    if not gamma > 1:
        raise ValueError("gamma must exceed 1")
    try:
        num = log_moment_abs(dist, 2.0 * (gamma - 1.0))
    except QuadratureError:
        return math.inf
    den = log_moment_abs(dist, gamma - 2.0)
    lv = num - 2.0 * (math.log(gamma - 1.0) + den)
    return math.exp(lv) if lv < 709.0 else math.inf


@dataclass(frozen=True)
class MomentTable:
    """Absolute moments ``gamma -> E|Z|**gamma`` of one family."""

    distribution: DistributionSpec
    entries: Dict[float, float] = field(default_factory=dict)

    @classmethod
    def build(cls, dist, gammas: Iterable[float]) -> "MomentTable":
        d = parse_dist(dist)
        return cls(d, {float(g): moment_abs(d, g) for g in gammas})

    def __getitem__(self, gamma: float) -> float:
        return self.entries[float(gamma)]

    def envelope(self) -> Dict[float, float]:
        """``gamma**alpha * E|Z|**gamma`` for each entry."""
        a = self.distribution.alpha
        if a is None:
            raise ValueError("envelope needs a compact family with a moment exponent")
        return {g: g ** a * m for g, m in self.entries.items()}
