"""Scalar special functions: lower Lambert branch and digamma.

Both are implemented locally (rather than through scipy.special) because the
required accuracy contracts are pinned by tests and the implementations are
a handful of lines: Halley iteration for W_{-1}, Bernoulli asymptotic series
with a recurrence shift for digamma.
"""
from __future__ import annotations

import math

_INV_E = math.exp(-1.0)

# Bernoulli-number coefficients B_{2k}/(2k) of the digamma asymptotic series
_DIGAMMA_COEF = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)

EULER_GAMMA = 0.5772156649015328606


def _halley_log_form(w, ell):
    # Solve g(w) = w + log(-w) - ell = 0 on w <= -1; avoids exp over/underflow.
    for _ in range(60):
        g = w + math.log(-w) - ell
        gp = 1.0 + 1.0 / w
        if gp == 0.0:
            break
        gpp = -1.0 / (w * w)
        step = 2.0 * g * gp / (2.0 * gp * gp - g * gpp)
        w_new = w - step
        if w_new >= -1.0:
            w_new = -1.0 - 0.5 * abs(1.0 + w)
        if abs(w_new - w) <= 1e-16 * abs(w_new):
            return w_new
        w = w_new
    return w


def lambert_w_lower_log(ell: float) -> float:
    """W_{-1}(h) given ell = log(-h); valid for ell <= -1 (i.e. h in [-1/e, 0)).

    The log-argument form stays finite for h far below double underflow,
    which the explicit branching-pgf inversions need at large times.
    """
    if ell > -1.0 + 1e-14:
        if ell > -1.0 + 1e-9:
            return -1.0
        raise ValueError(f"lambert_w_lower_log: ell={ell} above branch point -1")
    if ell > -1.0 + 0.7:
        # near the branch point use the series in p = sqrt(2(1 + e*h))
        p = math.sqrt(-2.0 * math.expm1(ell + 1.0))
        w = -1.0 - p - p * p / 3.0 - 11.0 * p ** 3 / 72.0
        w = min(w, -1.0 - 1e-17)
    else:
        # asymptotic seed for h -> 0-: W ~ ell - log(-ell)
        w = ell - math.log(-ell)
    return _halley_log_form(w, ell)


def lambert_w_lower(h: float) -> float:
    """Lower Lambert branch: w <= -1 with w*exp(w) = h, for h in [-1/e, 0).

    Residual |w e^w - h| <= 1e-13 |h|.
    """
    if not (-_INV_E - 1e-16 <= h < 0.0):
        raise ValueError(f"lambert_w_lower: h={h} outside [-1/e, 0)")
    if h <= -_INV_E:
        return -1.0
    return lambert_w_lower_log(math.log(-h))


def digamma(x: float) -> float:
    """Psi(x) = d/dx log Gamma(x) for x > 0, accurate to ~1e-14."""
    if x <= 0.0:
        raise ValueError(f"digamma: x={x} must be positive")
    acc = 0.0
    while x < 10.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    power = inv2
    for c in _DIGAMMA_COEF:
        series += c * power
        power *= inv2
        if power < 1e-22:
            break
    return acc + math.log(x) - 0.5 / x - series
