import math

import mpmath
import pytest

from cavs.special import EULER_GAMMA, log_gamma

mpmath.mp.dps = 40

# 30 reference points spanning the reflection, near-zero and Lanczos branches
POINTS = [
    -3.7, -2.5, -1.5, -0.5, -0.1, 1e-8, 0.001, 0.1, 0.25, 0.5, 0.9, 0.999999,
    1.000001, 1.1, 1.25, 1.5, 1.75, 1.999, 2.001, 2.5, 3.0, 3.5, 5.0, 7.25,
    10.0, 20.5, 57.0, 171.5, 1000.0, 1e6,
]


@pytest.mark.parametrize("x", POINTS)
def test_matches_high_precision_reference(x):
    ref = float(mpmath.log(abs(mpmath.gamma(mpmath.mpf(x)))))
    got = log_gamma(x)
    assert abs(got - ref) <= 1e-12 * max(1.0, abs(ref))


def test_exact_zeros():
    assert log_gamma(1.0) == 0.0
    assert log_gamma(2.0) == 0.0


def test_half_integer():
    assert log_gamma(1.5) == pytest.approx(math.log(math.sqrt(math.pi) / 2), abs=1e-12)
    assert log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), abs=1e-12)


def test_vanishes_along_one_plus_inverse_power():
    vals = [abs(log_gamma(1 + 1 / g)) for g in (10.0, 1e3, 1e6, 1e12)]
    assert vals == sorted(vals, reverse=True)
    assert vals[-1] < 1e-12


@pytest.mark.parametrize("x", [0.0, -1.0, -7.0])
def test_poles_rejected(x):
    with pytest.raises(ValueError):
        log_gamma(x)


def test_euler_constant():
    assert EULER_GAMMA == pytest.approx(float(mpmath.euler), abs=1e-15)


def test_agrees_with_stdlib():
    for x in (0.3, 1.7, 4.2, 33.3):
        assert log_gamma(x) == pytest.approx(math.lgamma(x), rel=1e-12, abs=1e-12)
