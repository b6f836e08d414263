"""Noise families, seeded samplers and analytic metadata.

Families are addressed by string tags such as ``"uniform"``, ``"semicircle"``,
``"tgauss:t=2"`` or ``"boundary-power:alpha=0.5"``. Symmetric families are
sampled as ``magnitude * sign`` from two separate uniform streams, so flipping
the sign stream negates the sample exactly.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import special as sps

from .core import Sample

__all__ = [
    "DistributionSpec",
    "SeededRng",
    "boundary_density",
    "parse_dist",
    "sample",
    "truncated_sigma",
]


@dataclass(frozen=True)
class SeededRng:
    """Counter-based random stream keyed by ``(seed, experiment, trial)``.

    Each key maps to its own Philox stream, so a trial's draws never depend on
    which worker ran it or in what order.
    """

    seed: int
    experiment: str = ""
    trial: int = 0

    def generator(self, substream: int = 0) -> np.random.Generator:
        exp_key = zlib.crc32(self.experiment.encode("utf-8"))
        ss = np.random.SeedSequence([int(self.seed) & 0xFFFFFFFFFFFFFFFF, exp_key, int(self.trial), substream])
        return np.random.Generator(np.random.Philox(ss))

    def child(self, trial: int) -> "SeededRng":
        return SeededRng(self.seed, self.experiment, trial)


def truncated_sigma(t: float) -> float:
    """Scale making ``sigma * W`` unit variance for ``W ~ N(0,1)`` given ``|W| <= t``."""
    if not t > 0:
        raise ValueError("truncation level must be positive")
    if math.isinf(t):
        return 1.0
    mass = math.erf(t / math.sqrt(2))
    pdf = math.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)
    var = 1.0 - 2.0 * t * pdf / mass
    return 1.0 / math.sqrt(var)


@dataclass(frozen=True)
class DistributionSpec:
    """A named noise family.

    ``alpha`` is the moment exponent in ``E|Z|**g ~ g**-alpha`` for compact
    families on ``[-support, support]``; ``None`` for unbounded support.
    """

    family: str
    params: tuple = ()
    tag: str = ""

    def param(self, key: str, default=None):
        return dict(self.params).get(key, default)

    # -- metadata ---------------------------------------------------------

    @property
    def support(self) -> float:
        f = self.family
        if f == "uniform":
            return self.param("b", 1.0)
        if f in ("semicircle", "ushape", "boundary-power", "rademacher"):
            return 1.0
        if f == "tgauss":
            t = self.param("t")
            return t * truncated_sigma(t) if self.param("unitvar", True) else t
        if f == "mixture":
            return 2.0
        return math.inf

    @property
    def alpha(self) -> Optional[float]:
        f = self.family
        if f in ("uniform", "tgauss", "mixture"):
            return 1.0
        if f == "semicircle":
            return 1.5
        if f == "ushape":
            return 0.5
        if f == "boundary-power":
            return self.param("alpha")
        return None

    @property
    def symmetric(self) -> bool:
        return self.family != "mixture"

    @property
    def variance(self) -> float:
        from .avar import moment_abs

        if self.family == "mixture":
            # E Z^2 = (2/3)(1/3) + (1/3)(4/3)
            return 2.0 / 9.0 + 4.0 / 9.0
        return moment_abs(self, 2.0)

    def __str__(self) -> str:
        return self.tag or self.family


_FAMILY_ALIASES = {
    "unif": "uniform",
    "uniform": "uniform",
    "gauss": "gaussian",
    "gaussian": "gaussian",
    "normal": "gaussian",
    "semicircle": "semicircle",
    "ushape": "ushape",
    "u-shape": "ushape",
    "tgauss": "tgauss",
    "tgauss-raw": "tgauss-raw",
    "boundary-power": "boundary-power",
    "mixture": "mixture",
    "asym-mixture": "mixture",
    "gg": "gg",
    "gengauss": "gg",
    "rademacher": "rademacher",
}


def parse_dist(tag) -> DistributionSpec:
    """Parse a tag like ``"tgauss:t=2"`` into a :class:`DistributionSpec`.

    Recognised tags: ``uniform[:b=B]``, ``uniform:unitvar``, ``gaussian``,
    ``semicircle``, ``ushape``, ``tgauss:t=T`` (unit variance),
    ``tgauss-raw:t=T`` (support ``[-T, T]``), ``boundary-power:alpha=A``,
    ``mixture``, ``gg:shape=G[,sigma=S]`` and ``rademacher``.
    """
    if isinstance(tag, DistributionSpec):
        return tag
    text = str(tag).strip()
    name, _, rest = text.partition(":")
    name = name.strip().lower()
    if name not in _FAMILY_ALIASES:
        raise ValueError(f"unknown distribution tag {text!r}")
    family = _FAMILY_ALIASES[name]
    kv = {}
    flags = set()
    for part in filter(None, (p.strip() for p in rest.split(","))):
        if "=" in part:
            k, v = part.split("=", 1)
            kv[k.strip()] = float(v)
        else:
            flags.add(part)
    if family == "tgauss-raw":
        family = "tgauss"
        kv["unitvar"] = False
    if family == "uniform" and "unitvar" in flags:
        kv["b"] = math.sqrt(3.0)
    if family == "tgauss":
        if "t" not in kv or not kv["t"] > 0:
            raise ValueError("tgauss needs a positive truncation level, e.g. tgauss:t=2")
        kv.setdefault("unitvar", True)
    if family == "boundary-power":
        a = kv.get("alpha")
        if a is None or not a > 0:
            raise ValueError("boundary-power needs alpha > 0")
    if family == "gg":
        if "shape" not in kv and "gamma" in kv:
            kv["shape"] = kv.pop("gamma")
        if not kv.get("shape", 0) > 0:
            raise ValueError("gg needs shape > 0, e.g. gg:shape=3")
        kv.setdefault("sigma", 1.0)
    if family == "uniform" and not kv.get("b", 1.0) > 0:
        raise ValueError("uniform half-width must be positive")
    return DistributionSpec(family, tuple(sorted(kv.items())), text)


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------


def _magnitudes(dist: DistributionSpec, n: int, g: np.random.Generator) -> np.ndarray:
    f = dist.family
    if f == "uniform":
        return dist.param("b", 1.0) * g.random(n)
    if f == "gaussian":
        return np.abs(g.standard_normal(n))
    if f == "semicircle":
        # rejection under the flat envelope, acceptance pi/4
        out = np.empty(0)
        while out.size < n:
            m = max(16, int((n - out.size) * 1.35) + 8)
            a = g.random(m)
            v = g.random(m)
            out = np.concatenate([out, a[v * v <= 1.0 - a * a]])
        return out[:n]
    if f in ("ushape", "boundary-power"):
        alpha = dist.alpha
        u = g.random(n)
        # |X| has density alpha * (1 - a)**(alpha - 1) on [0, 1]
        return 1.0 - (1.0 - u) ** (1.0 / alpha)
    if f == "tgauss":
        t = dist.param("t")
        mass = sps.ndtr(t) - 0.5
        w = sps.ndtri(0.5 + g.random(n) * mass)
        w = np.minimum(w, t)
        scale = truncated_sigma(t) if dist.param("unitvar", True) else 1.0
        return scale * w
    if f == "gg":
        shape = dist.param("shape")
        return dist.param("sigma", 1.0) * g.gamma(1.0 / shape, 1.0, n) ** (1.0 / shape)
    if f == "rademacher":
        return np.ones(n)
    raise ValueError(f"no magnitude sampler for {f}")


def sample(dist, n: int, rng, *, flip_signs: bool = False) -> Sample:
    """Draw ``n`` i.i.d. noise values.

    Parameters
    ----------
    dist : DistributionSpec or str
    n : int
    rng : SeededRng or numpy Generator
    flip_signs : bool
        Negate the sign stream; for symmetric families this returns exactly
        the negated sample.
    """
    dist = parse_dist(dist)
    if n < 1:
        raise ValueError("n must be >= 1")
    if isinstance(rng, SeededRng):
        g_mag, g_sign = rng.generator(0), rng.generator(1)
    else:
        g_mag = g_sign = rng
    if dist.family == "mixture":
        # (2/3) Unif[-1, 0] + (1/3) Unif[0, 2]
        pick = g_sign.random(n) < 2.0 / 3.0
        u = g_mag.random(n)
        z = np.where(pick, -u, 2.0 * u)
        return Sample(-z if flip_signs else z)
    mag = _magnitudes(dist, n, g_mag)
    signs = np.where(g_sign.random(n) < 0.5, -1.0, 1.0)
    if flip_signs:
        signs = -signs
    return Sample(mag * signs)


def boundary_density(dist) -> Optional[float]:
    """Density at the upper support endpoint, or ``None`` for unbounded support."""
    dist = parse_dist(dist)
    f = dist.family
    if f == "uniform":
        return 1.0 / (2.0 * dist.param("b", 1.0))
    if f == "semicircle":
        return 0.0
    if f == "ushape":
        return math.inf
    if f == "boundary-power":
        a = dist.alpha
        if a < 1:
            return math.inf
        return a / 2.0 if a == 1 else 0.0
    if f == "tgauss":
        t = dist.param("t")
        mass = math.erf(t / math.sqrt(2))
        pdf = math.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)
        scale = truncated_sigma(t) if dist.param("unitvar", True) else 1.0
        return pdf / (mass * scale)
    if f == "mixture":
        return 1.0 / 6.0
    return None
