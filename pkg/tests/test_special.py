import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from branchlab.special import (EULER_GAMMA, digamma, lambert_w_lower,
                               lambert_w_lower_log)


def test_lambert_identity_over_log_spaced_grid():
    hs = -np.exp(np.linspace(math.log(1e-300), math.log(1 / math.e - 1e-12), 1000))
    for h in hs:
        w = lambert_w_lower(float(h))
        assert w <= -1.0
        resid = abs(w * math.exp(w) - h)
        assert resid <= 1e-13 * max(abs(h), 1e-300)


def test_lambert_branch_point_and_domain():
    assert lambert_w_lower(-1.0 / math.e) == -1.0
    with pytest.raises(ValueError):
        lambert_w_lower(0.0)
    with pytest.raises(ValueError):
        lambert_w_lower(-0.5)
    with pytest.raises(ValueError):
        lambert_w_lower(1e-3)


def test_lambert_known_value():
    # mpmath.lambertw(-0.1, -1) = -3.577152063957297
    assert lambert_w_lower(-0.1) == pytest.approx(-3.577152063957297, abs=1e-12)


def test_lambert_log_form_reaches_below_double_underflow():
    # log(-h) = -800 corresponds to h far below the double-precision floor
    w = lambert_w_lower_log(-800.0)
    assert w + math.log(-w) == pytest.approx(-800.0, abs=1e-10)


def test_digamma_at_three_matches_harmonic_sum():
    # Psi(3) = -gamma + 1 + 1/2, with gamma via the brute harmonic-sum limit
    n = 10 ** 7
    gamma_brute = math.fsum(1.0 / k for k in range(1, n + 1)) - math.log(n) - 1.0 / (2 * n)
    psi3_brute = -gamma_brute + 1.0 + 0.5
    assert digamma(3.0) == pytest.approx(psi3_brute, abs=1e-12)
    assert digamma(3.0) == pytest.approx(1.5 - EULER_GAMMA, abs=1e-13)


def test_digamma_domain():
    with pytest.raises(ValueError):
        digamma(0.0)
    with pytest.raises(ValueError):
        digamma(-2.5)


@given(st.floats(min_value=0.05, max_value=50.0))
@settings(max_examples=50, deadline=None)
def test_digamma_recurrence(x):
    assert digamma(x + 1.0) == pytest.approx(digamma(x) + 1.0 / x, rel=1e-12,
                                             abs=1e-12)


def test_digamma_large_argument_asymptote():
    x = 1e8
    assert digamma(x) == pytest.approx(math.log(x) - 0.5 / x, abs=1e-12)
