"""Scaling ingredients of the three limit regimes.

Finite variance: mean m(t) = e^{lambda t}, second moment m2(t), variance
sigma^2(t), and the Gaussian limit covariance m(|s-t|) sigma^2(s^t).

Finite mean, infinite variance: the tail-correction profile c(t) and the
normalizing sequence a_n solving L(a_n) = a_n^alpha/(alpha n) exactly.

Infinite mean: alpha(t) = e^{-aAt} and beta(t) = exp((B-1)(1-alpha(t))/A)
of the continuous-state branching limit, plus the conditional profile of the
explosive Sibuya case (explosion probability, mean explosion time, a_n(t)).

Near-critical formulas switch to series branches when the exponent argument
drops below 1e-8, where e^{x}-1 style cancellation would dominate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

from .offspring import (OffspringSpec, ProcessParams, SibuyaOffspring,
                        assumption_a, moment_profile, tail_constants)
from .special import EULER_GAMMA, digamma

_SERIES_CUT = 1e-8


@dataclass(frozen=True)
class MeanVariance:
    m: float
    m2: float
    sigma2: float


def mean_and_variance(params: ProcessParams, t: float) -> MeanVariance:
    """m(t), m2(t) and sigma^2(t); infinities when the moments do not exist."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    prof = moment_profile(params)
    lam, tau2 = prof.lam, prof.tau2
    if not math.isfinite(prof.mean_m):
        return MeanVariance(math.inf, math.inf, math.inf)
    m = math.exp(lam * t)
    if not prof.second_moment_finite:
        return MeanVariance(m, math.inf, math.inf if t > 0 else 0.0)
    if abs(lam) < _SERIES_CUT:
        # sigma^2 = (tau2 - lam) e^{lt}(e^{lt}-1)/l, expanded about lam = 0
        x = lam * t
        growth = t * (1.0 + 1.5 * x + 7.0 / 6.0 * x * x + 0.625 * x ** 3)
        sigma2 = (tau2 - lam) * growth
        m2 = tau2 * growth + m
    else:
        growth = m * math.expm1(lam * t) / lam
        sigma2 = (tau2 - lam) * growth
        m2 = tau2 * growth + m
    return MeanVariance(m, m2, sigma2)


@dataclass(frozen=True)
class GaussianLimitProfile:
    """Limit of (Z^{(n)} - n m(t))/sqrt(n): centered Gaussian Markov process
    with covariance m(|s-t|) sigma^2(min(s,t))."""
    lam: float
    tau2: float

    def m(self, t: float) -> float:
        return math.exp(self.lam * t)

    def sigma2(self, t: float) -> float:
        if abs(self.lam) < _SERIES_CUT:
            x = self.lam * t
            return (self.tau2 - self.lam) * t * (1.0 + 1.5 * x + 7.0 / 6.0 * x * x
                                                 + 0.625 * x ** 3)
        return (self.tau2 - self.lam) * self.m(t) * math.expm1(self.lam * t) / self.lam

    def covariance(self, s: float, t: float) -> float:
        return self.m(abs(s - t)) * self.sigma2(min(s, t))

    @classmethod
    def from_params(cls, params: ProcessParams) -> "GaussianLimitProfile":
        prof = moment_profile(params)
        if not prof.second_moment_finite:
            raise ValueError("Gaussian limit requires a finite second moment")
        return cls(lam=prof.lam, tau2=prof.tau2)

    def to_dict(self) -> dict:
        return {"regime": "gaussian", "lambda": self.lam, "tau2": self.tau2}


def gaussian_covariance(profile: GaussianLimitProfile, s: float, t: float) -> float:
    if s < 0 or t < 0:
        raise ValueError("times must be nonnegative")
    return profile.covariance(s, t)


def c_profile(params: ProcessParams, alpha: float, t: float) -> float:
    """c(t) = a t in the critical case, else a e^{lt}(e^{l(alpha-1)t} - 1)/((alpha-1) l)."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    prof = moment_profile(params)
    if not math.isfinite(prof.mean_m):
        raise ValueError("c(t) requires a finite offspring mean")
    lam, a = prof.lam, params.a
    if lam == 0.0:
        return a * t
    x = lam * (alpha - 1.0) * t
    if abs(x) < _SERIES_CUT:
        series = t * (1.0 + x / 2.0 + x * x / 6.0 + x ** 3 / 24.0)
        return a * math.exp(lam * t) * series
    return a * math.exp(lam * t) * math.expm1(x) / ((alpha - 1.0) * lam)


@dataclass(frozen=True)
class StableOUProfile:
    """Limit of (Z^{(n)} - n m(t))/a_n: an Ornstein-Uhlenbeck type process with
    spectrally positive alpha-stable marginals, Laplace transform
    exp(c(t) eta^alpha / alpha)."""
    alpha: float
    lam: float
    rate: float
    _c: Callable[[float], float]
    _normalizer: Callable[[int], float]

    def m(self, t: float) -> float:
        return math.exp(self.lam * t)

    def c(self, t: float) -> float:
        return self._c(t)

    def normalizer(self, n: int) -> float:
        return self._normalizer(n)

    @classmethod
    def from_params(cls, params: ProcessParams) -> "StableOUProfile":
        data = assumption_a(params.offspring)
        if data is None:
            raise ValueError(f"{params.offspring.family_name} has no tail-correction data")
        alpha, _L = data
        prof = moment_profile(params)
        return cls(alpha=alpha, lam=prof.lam, rate=params.a,
                   _c=lambda t: c_profile(params, alpha, t),
                   _normalizer=lambda n: normalizer_an(params.offspring, alpha, n))

    def to_dict(self) -> dict:
        return {"regime": "stable_ou", "alpha": self.alpha, "lambda": self.lam}


def normalizer_an(spec: OffspringSpec, alpha: float, n: int) -> float:
    """Exact positive root of x^alpha = alpha n L(x) on [1, 1e30].

    The defining relation alpha n L(a_n)/a_n^alpha = 1 holds to 1e-12 at the
    returned point (the contract requires 1e-9).
    """
    data = assumption_a(spec)
    if data is None:
        raise ValueError(f"{spec.family_name} has no tail-correction data")
    alpha_spec, L = data
    if abs(alpha - alpha_spec) > 1e-12:
        raise ValueError(f"alpha={alpha} does not match the variant's {alpha_spec}")
    if n < 1:
        raise ValueError("n must be a positive integer")

    def rel(x):
        return alpha * n * L(x) / x ** alpha

    lo, hi = 0.0, 30.0 * math.log(10.0)  # bracket in log x
    if rel(math.exp(lo)) < 1.0:
        return 1.0  # relation already below 1 at x = 1 (n = 1 style corner)
    if rel(math.exp(hi)) > 1.0:
        raise RuntimeError("normalizer bracket failure on [1, 1e30]")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        r = rel(math.exp(mid))
        if r > 1.0:
            lo = mid
        else:
            hi = mid
        if abs(r - 1.0) < 1e-13 or (hi - lo) < 1e-15:
            break
    x = math.exp(0.5 * (lo + hi))
    # Newton polish on log-scale: d/dlogx log(rel) = x L'(x)/L(x) - alpha
    for _ in range(8):
        r = rel(x)
        if abs(r - 1.0) <= 1e-13:
            break
        eps = 1e-6
        dlog = (math.log(rel(x * (1 + eps))) - math.log(rel(x * (1 - eps)))) / (2 * eps)
        if dlog == 0.0:
            break
        x *= math.exp(-math.log(r) / dlog)
    return x


@dataclass(frozen=True)
class CsbpProfile:
    """Limit of n^{-1/alpha(t)} Z^{(n)}: continuous-state branching process with
    alpha(t)-stable marginals, Laplace transform exp(-beta(t) lambda^{alpha(t)})."""
    A: float
    B: float
    rate: float

    def __post_init__(self):
        if not (0.0 < self.A < math.inf):
            raise ValueError(f"CSBP regime needs A in (0, inf), got {self.A}")
        if not math.isfinite(self.B):
            raise ValueError("CSBP regime needs finite B")

    def alpha_t(self, t: float) -> float:
        return math.exp(-self.rate * self.A * t)

    def beta_t(self, t: float) -> float:
        return math.exp((self.B - 1.0) / self.A * (1.0 - self.alpha_t(t)))

    @classmethod
    def from_params(cls, params: ProcessParams) -> "CsbpProfile":
        tc = tail_constants(params.offspring)
        if not (math.isfinite(tc.A) and tc.A > 0.0):
            raise ValueError("A outside (0, inf): boundary regimes are unsupported")
        if tc.B is None or not math.isfinite(tc.B):
            raise ValueError("CSBP regime needs finite B")
        return cls(A=tc.A, B=tc.B, rate=params.a)

    def to_dict(self) -> dict:
        return {"regime": "csbp", "A": self.A, "B": self.B, "rate": self.rate}


def stable_profile(params: ProcessParams) -> CsbpProfile:
    return CsbpProfile.from_params(params)


@dataclass(frozen=True)
class ExplosiveProfile:
    """Conditional (on Z_t finite) scaling data for Sibuya offspring."""
    alpha: float  # offspring tail parameter in (0, 1)
    rate: float

    def alpha_t(self, t: float) -> float:
        return 1.0 if t == 0.0 else 1.0 - self.alpha

    def beta_t(self, t: float) -> float:
        if t <= 0.0:
            return 1.0
        oma = 1.0 - self.alpha
        decay = math.exp(-oma * self.rate * t)
        grow = -math.expm1(-oma * self.rate * t)  # 1 - e^{-(1-alpha) a t}
        return grow ** (self.alpha / oma) * decay / (oma * (1.0 - grow ** (1.0 / oma)))

    def p_infinity(self, t: float) -> float:
        if t <= 0.0:
            return 0.0
        oma = 1.0 - self.alpha
        return (-math.expm1(-oma * self.rate * t)) ** (1.0 / oma)

    def a_n(self, n: int, t: float) -> float:
        at = self.alpha_t(t)
        return (n * at * self.beta_t(t)) ** (1.0 / at)

    def mean_explosion_time(self) -> float:
        oma = 1.0 - self.alpha
        return (digamma((2.0 - self.alpha) / oma) + EULER_GAMMA) / (self.rate * oma)

    @classmethod
    def from_params(cls, params: ProcessParams) -> "ExplosiveProfile":
        if not isinstance(params.offspring, SibuyaOffspring):
            raise ValueError("explosive profile is defined for Sibuya offspring only")
        return cls(alpha=params.offspring.alpha, rate=params.a)

    def to_dict(self) -> dict:
        return {"regime": "explosive_conditional", "alpha": self.alpha, "rate": self.rate}


def explosive_profile(params: ProcessParams) -> ExplosiveProfile:
    return ExplosiveProfile.from_params(params)
