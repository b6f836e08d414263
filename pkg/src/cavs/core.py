"""L_gamma centers of univariate samples.

The L_gamma center of ``y`` is ``argmin_theta sum |y_i - theta|**gamma``. It is
the sample mean at ``gamma = 2`` and tends to the midrange as ``gamma`` grows.
All solvers work on data rescaled to ``[-1, 1]`` and normalise residual powers
by the largest residual so that powers in the thousands never overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import numpy as np

__all__ = [
    "INF",
    "ConvergenceError",
    "Power",
    "Sample",
    "SolverConfig",
    "as_power",
    "lgamma_center",
    "lgamma_objective_log_mean",
    "midrange",
    "min_objective_log",
]


class ConvergenceError(ArithmeticError):
    """Raised when an iterative solver exhausts its iteration budget."""

    def __init__(self, message: str, last_iterate: float = math.nan, gradient: float = math.nan):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.gradient = gradient


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=False)
class Power:
    """A candidate power: a finite ``gamma >= 2`` or infinity.

    ``Power(math.inf)`` stands for the midrange limit.
    """

    value: float

    def __post_init__(self):
        v = float(self.value)
        if math.isnan(v):
            raise ValueError("power must not be NaN")
        if v < 2:
            raise ValueError(f"power must be >= 2, got {v}")
        object.__setattr__(self, "value", v)

    @property
    def is_inf(self) -> bool:
        return math.isinf(self.value)

    def __lt__(self, other: "Power") -> bool:
        return self.value < other.value

    def __le__(self, other: "Power") -> bool:
        return self.value <= other.value

    def __str__(self) -> str:
        if self.is_inf:
            return "inf"
        if self.value.is_integer():
            return str(int(self.value))
        return repr(self.value)


INF = Power(math.inf)


def as_power(value: Union["Power", float, int, str]) -> Power:
    if isinstance(value, Power):
        return value
    if isinstance(value, str):
        s = value.strip().lower()
        if s in ("inf", "infinity", "oo"):
            return INF
        return Power(float(s))
    return Power(float(value))


class Sample:
    """Immutable batch of finite observations with cached summaries."""

    __slots__ = ("_values", "min", "max", "mean", "variance")

    def __init__(self, values: Iterable[float]):
        arr = np.array(values, dtype=float).ravel()
        if arr.size == 0:
            raise ValueError("sample must contain at least one value")
        if not np.all(np.isfinite(arr)):
            raise ValueError("sample values must be finite")
        arr.setflags(write=False)
        self._values = arr
        self.min = float(arr.min())
        self.max = float(arr.max())
        mean = float(np.mean(arr))
        # clamp rounding so min <= mean <= max always holds
        self.mean = min(max(mean, self.min), self.max)
        if self.min == self.max:
            self.variance = 0.0
        else:
            self.variance = float(np.mean((arr - mean) ** 2))

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def n(self) -> int:
        return self._values.size

    @property
    def range(self) -> float:
        return self.max - self.min

    @property
    def is_constant(self) -> bool:
        return self.min == self.max

    def __len__(self) -> int:
        return self.n

    def affine(self, b: float, a: float) -> "Sample":
        return Sample(b * self._values + a)

    def __repr__(self) -> str:
        return f"Sample(n={self.n}, min={self.min:g}, max={self.max:g})"


def _as_sample(sample) -> Sample:
    return sample if isinstance(sample, Sample) else Sample(sample)


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances for the Newton solvers.

    ``gradient_tolerance`` is measured on the rescaled ``[-1, 1]`` problem.
    ``damping`` is the relative Hessian ridge used by the regression solver.
    """

    gradient_tolerance: float = 1e-12
    max_iterations: int = 200
    damping: float = 1e-8

    def __post_init__(self):
        if not self.gradient_tolerance > 0:
            raise ValueError("gradient_tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.damping < 0:
            raise ValueError("damping must be nonnegative")


DEFAULT_SOLVER = SolverConfig()

# beyond this multiple of n the L_gamma center equals the midrange to within
# floating resolution (deterministic bound 2 * range * log(n) / gamma)
MIDRANGE_CUTOFF = 64


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def midrange(sample) -> float:
    """Return ``(max + min) / 2``."""
    s = _as_sample(sample)
    return (s.max + s.min) / 2


def _rescale(s: Sample):
    """Map the sample onto ``[-1, 1]``.

    Returns ``(z, mid, half, scale)`` with ``y = mid + z * half / scale``.
    ``scale`` is an exact power of two that keeps ``half`` normal when the
    range is subnormal; it is 1 otherwise.
    """
    mid = (s.max + s.min) / 2
    scale = 1.0
    if (s.max - s.min) / 2 < 2.0 ** -1000:
        scale = 2.0 ** 600
    v = s.values * scale
    ms = mid * scale
    half = (float(v.max()) - float(v.min())) / 2
    return (v - ms) / half, mid, half, scale


def _unscale(t: float, mid: float, half: float, scale: float) -> float:
    return mid + (t * half) / scale


def _newton_center(z: np.ndarray, p: float, theta0: float, cfg: SolverConfig) -> float:
    """Minimise ``mean |z - t|**p`` over ``t`` for ``z`` in ``[-1, 1]`` and ``p > 1``.

    Safeguarded Newton on the monotone derivative with a shrinking bracket;
    steps leaving the bracket or stalling fall back to bisection.
    """
    lo, hi = float(z.min()), float(z.max())
    t = min(max(theta0, lo), hi)
    dx_old = hi - lo
    dx = dx_old
    tol = cfg.gradient_tolerance
    grad = math.nan
    for _ in range(cfg.max_iterations):
        r = z - t
        a = np.abs(r)
        m = a.max()
        if m == 0.0:
            return t
        u = a / m
        up = u ** (p - 1.0)
        # derivative of the objective, divided by m**(p-1) * p
        g = -float(np.dot(np.sign(r), up))
        scale = float(up.sum())
        grad = g / scale if scale > 0 else 0.0
        if abs(grad) <= tol:
            return t
        if g < 0:
            lo = t
        else:
            hi = t
        if p >= 2.0:
            h = (p - 1.0) * float(np.sum(u ** (p - 2.0)))
        else:
            nz = u > 0
            h = (p - 1.0) * float(np.sum(u[nz] ** (p - 2.0))) if nz.any() else math.inf
        step = g * m / h if (h > 0 and math.isfinite(h)) else math.nan
        t_new = t - step
        if not (lo < t_new < hi) or abs(2 * step) > abs(dx_old):
            dx_old = dx
            dx = (hi - lo) / 2
            t_new = lo + dx
        else:
            dx_old = dx
            dx = step
        if hi - lo <= tol or abs(t_new - t) <= tol * 1e-3:
            return t_new
        t = t_new
    raise ConvergenceError(
        f"Newton iteration for power {p:g} did not converge in {cfg.max_iterations} steps",
        last_iterate=t,
        gradient=grad,
    )


def lgamma_center(
    sample,
    power: Union[Power, float, str] = 2.0,
    cfg: SolverConfig = DEFAULT_SOLVER,
    init: Optional[float] = None,
) -> float:
    """Compute the L_gamma center of a sample.

    Parameters
    ----------
    sample : Sample or array_like
    power : Power or float
        ``gamma >= 2`` or ``inf``.
    cfg : SolverConfig
    init : float, optional
        Warm start in the original data units. Defaults to the midrange.

    Returns
    -------
    float
        The minimiser of ``sum |y_i - theta|**gamma``; the mean for
        ``gamma = 2`` and the midrange for ``gamma = inf``.
    """
    s = _as_sample(sample)
    g = as_power(power)
    if s.is_constant:
        return s.min
    if g.is_inf or g.value > MIDRANGE_CUTOFF * s.n:
        return midrange(s)
    if g.value == 2.0:
        return s.mean
    z, mid, half, sc = _rescale(s)
    t0 = 0.0 if init is None else (init - mid) * sc / half
    t = _newton_center(z, g.value, t0, cfg)
    return min(max(_unscale(t, mid, half, sc), s.min), s.max)


def _log_mean_pow(z: np.ndarray, p: float, center: float) -> float:
    if p == 0:
        return 0.0
    a = np.abs(z - center)
    m = float(a.max())
    if m == 0.0:
        return -math.inf
    return p * math.log(m) + math.log(float(np.mean((a / m) ** p)))


def lgamma_objective_log_mean(sample, p: float, center: float) -> float:
    """``log(mean |y_i - center|**p)`` evaluated without overflow.

    Returns ``-inf`` when every residual is zero and ``p > 0``, and ``0`` for
    ``p = 0``.
    """
    s = _as_sample(sample)
    if not (p >= 0 and math.isfinite(p)):
        raise ValueError(f"p must be finite and >= 0, got {p}")
    if not math.isfinite(center):
        raise ValueError("center must be finite")
    return _log_mean_pow(s.values, p, center)


def _golden(f, a: float, b: float, tol: float = 1e-13, maxiter: int = 200) -> float:
    invphi = (math.sqrt(5) - 1) / 2
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(maxiter):
        if abs(b - a) <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return (a + b) / 2


_SCAN_POINTS = 1024


def _min_subunit(z: np.ndarray, p: float) -> tuple:
    """Minimiser for ``p < 1`` as ``(t, index)``; ``index`` names the data point
    when the minimum sits on one (the usual case), else ``None``."""
    # nonconvex for p < 1: the objective is concave between data points
    grid = np.linspace(-1.0, 1.0, _SCAN_POINTS)
    vals = np.array([_log_mean_pow(z, p, t) for t in grid])
    k = int(np.argmin(vals))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, _SCAN_POINTS - 1)]
    t = _golden(lambda x: _log_mean_pow(z, p, x), a, b)
    cands = [(t, None), (float(grid[k]), None)]
    inside = np.flatnonzero((z >= a) & (z <= b))
    cands.extend((float(z[i]), int(i)) for i in inside)
    return min(cands, key=lambda c: _log_mean_pow(z, p, c[0]))


def min_objective_log(
    sample,
    p: float,
    cfg: SolverConfig = DEFAULT_SOLVER,
    init: Optional[float] = None,
) -> tuple[float, float]:
    """Minimise ``mean |y_i - theta|**p`` over ``theta``.

    Returns
    -------
    (theta_star, log_min)
        The minimiser and ``log`` of the minimum. ``log_min`` is ``-inf`` for
        a constant sample and ``0`` for ``p = 0``.
    """
    s = _as_sample(sample)
    if not (p >= 0 and math.isfinite(p)):
        raise ValueError(f"p must be finite and >= 0, got {p}")
    if p == 0:
        return s.mean, 0.0
    if s.is_constant:
        return s.min, -math.inf
    z, mid, half, sc = _rescale(s)
    if p == 2.0:
        t = (s.mean - mid) * sc / half
    elif p > 1.0:
        if p > MIDRANGE_CUTOFF * s.n:
            t = 0.0
        else:
            t0 = 0.0 if init is None else (init - mid) * sc / half
            t = _newton_center(z, p, t0, cfg)
    elif p == 1.0:
        t = (float(np.median(s.values)) - mid) * sc / half
    else:
        t, idx = _min_subunit(z, p)
        if idx is not None:
            # a cusp minimum: report the data value itself, not its rescaled round trip
            theta = float(s.values[idx])
            return theta, float(_log_mean_pow(s.values, p, theta))
    log_min = _log_mean_pow(z, p, t) + p * (math.log(half) - math.log(sc))
    return float(_unscale(t, mid, half, sc)), float(log_min)
