"""Log-gamma via the Lanczos approximation (g = 7, 9 terms)."""

import math

EULER_GAMMA = 0.57721566490153286060651209008240243

_G = 7
_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


def _lanczos_log(x: float) -> float:
    # valid for x >= 0.5
    x -= 1.0
    acc = _COEF[0]
    for k in range(1, _G + 2):
        acc += _COEF[k] / (x + k)
    t = x + _G + 0.5
    return _HALF_LOG_2PI + (x + 0.5) * math.log(t) - t + math.log(acc)


def log_gamma(x: float) -> float:
    """``log |Gamma(x)|`` for real ``x`` that is not a nonpositive integer.

    The exact zeros at ``x = 1`` and ``x = 2`` are returned exactly; near them
    the recurrence ``Gamma(x) = Gamma(x + 1) / x`` keeps absolute error near
    machine precision.
    """
    x = float(x)
    if math.isnan(x):
        return math.nan
    if math.isinf(x):
        return math.inf
    if x <= 0 and x == math.floor(x):
        raise ValueError(f"log_gamma has a pole at {x}")
    if x == 1.0 or x == 2.0:
        return 0.0
    if x < 0.5:
        # reflection
        return math.log(math.pi / abs(math.sin(math.pi * x))) - log_gamma(1.0 - x)
    if x < 1.5:
        # log Gamma(x) = log Gamma(x + 1) - log x, with log1p near x = 1
        return _log_gamma_near_two(x + 1.0) - math.log(x)
    if x < 2.5:
        return _log_gamma_near_two(x)
    return _lanczos_log(x)


def _log_gamma_near_two(x: float) -> float:
    # Taylor series of log Gamma(2 + e) about e = 0 converges for |e| < 1 and
    # avoids cancellation around the zero at x = 2.
    e = x - 2.0
    if abs(e) > 0.5:
        return _lanczos_log(x)
    # log Gamma(1 + y) = -gamma*y + sum_{k>=2} (-1)^k zeta(k) y^k / k, y = 1 + e
    # log Gamma(2 + e) = log(1 + e) + log Gamma(1 + e)
    s = -EULER_GAMMA * e
    term_pow = e
    for k in range(2, 60):
        term_pow *= e
        c = _ZETA[k] / k
        s += c * term_pow if k % 2 == 0 else -c * term_pow
        if abs(term_pow) * c < 1e-18:
            break
    return math.log1p(e) + s


def _zeta_table(kmax: int = 60):
    out = [math.nan, math.nan]
    for k in range(2, kmax):
        # direct sum with Euler-Maclaurin tail, ample for k >= 2
        N = 30
        acc = sum(j ** -k for j in range(1, N))
        acc += N ** (1 - k) / (k - 1) + 0.5 * N ** -k + k * N ** (-k - 1) / 12
        acc -= k * (k + 1) * (k + 2) * N ** (-k - 3) / 720
        out.append(acc)
    return out


_ZETA = _zeta_table()
