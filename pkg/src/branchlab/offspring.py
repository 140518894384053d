"""Offspring distribution catalog.

Each individual in the branching process lives an Exp(a) lifetime and is
replaced by xi offspring, where xi follows one of the laws below.  The
catalog carries, per law, the pgf f(s) = E s^xi in a cancellation-safe form,
an exact sampler (dispatched to the jit kernels), closed-form moments, the
slowly varying function L(x) = x(1 - f(1 - 1/x)), tail constants
A = lim L(x)/log x and B = lim (L(x) - A log x), the extinction probability
and the explosion criterion.

Conventions fixed here:
  * Geometric has support {0, 1, 2, ...} with P(xi = k) = p q^k, which
    matches the descending factorial moments j! (q/p)^j.
  * BirthDeath{a1, a2} is the two-point law on {0, 2} with p0 = a2/(a1+a2);
    its natural lifetime rate is a1 + a2.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .streams import CounterStream

_TAIL_TABLE_LEN = 1_000_000
_table_cache: dict = {}


class Verdict(enum.Enum):
    NON_EXPLOSIVE = "non_explosive"
    EXPLOSIVE = "explosive"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class MomentProfile:
    """Offspring/process moment data: m = E xi, lam = a(m-1), tau2 = a E xi(xi-1)."""
    mean_m: float
    lam: float
    tau2: float
    second_moment_finite: bool
    approximate: bool = False


@dataclass(frozen=True)
class TailConstants:
    A: float
    B: Optional[float]
    provenance: str  # "closed_form" | "numeric_extrapolation"
    uncertainty: Optional[float] = None


# --------------------------------------------------------------------------
# catalog variants
# --------------------------------------------------------------------------

class OffspringSpec:
    """Base class; concrete laws override the hooks they support."""

    family_name = "abstract"

    # ---- pgf -------------------------------------------------------------
    def _pgf(self, s: float) -> float:
        raise NotImplementedError

    def _one_minus_pgf(self, s: float) -> float:
        return 1.0 - self._pgf(s)

    # ---- moments ---------------------------------------------------------
    def _mean(self) -> float:
        raise NotImplementedError

    def _factorial2(self) -> float:
        """E xi(xi-1), possibly inf."""
        raise NotImplementedError

    def _p0(self) -> float:
        return self._pgf(0.0)

    # m(1-s) - (1-f(s)) in a cancellation-safe form; finite mean only
    def _mean_gap(self, s: float) -> float:
        m = self._mean()
        if not math.isfinite(m):
            raise ValueError(f"{self.family_name}: mean gap needs a finite mean")
        return m * (1.0 - s) - self._one_minus_pgf(s)

    # Assumption-A data (alpha, L) with 1-f(s) = m(1-s) - (1-s)^alpha L(1/(1-s))
    def _assumption_a(self):
        return None

    def _tail_constants_closed(self) -> Optional[TailConstants]:
        return None

    def _extinction_closed(self) -> Optional[float]:
        return None

    def _explosion_closed(self) -> Optional[Verdict]:
        return None

    # ---- sampling --------------------------------------------------------
    def _kernel_pack(self):
        """(family_code, fparams, tail_table, tail_alpha) for the jit kernels."""
        raise NotImplementedError

    def _params_dict(self) -> dict:
        return {}


@dataclass(frozen=True)
class Geometric(OffspringSpec):
    p: float
    family_name = "geometric"

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"geometric: p={self.p} outside (0, 1)")

    def _pgf(self, s):
        return self.p / (1.0 - (1.0 - self.p) * s)

    def _one_minus_pgf(self, s):
        q = 1.0 - self.p
        return q * (1.0 - s) / (1.0 - q * s)

    def _mean(self):
        return (1.0 - self.p) / self.p

    def _factorial2(self):
        return 2.0 * ((1.0 - self.p) / self.p) ** 2

    def _p0(self):
        return self.p

    def _mean_gap(self, s):
        q = 1.0 - self.p
        return q * q * (1.0 - s) ** 2 / (self.p * (1.0 - q * s))

    def _assumption_a(self):
        q = 1.0 - self.p

        def L(x):
            s = 1.0 - 1.0 / x
            return q * q / (self.p * (1.0 - q * s))

        return 2.0, L

    def _extinction_closed(self):
        q = 1.0 - self.p
        return min(1.0, self.p / q) if q > 0 else 1.0

    def _explosion_closed(self):
        return Verdict.NON_EXPLOSIVE

    def _kernel_pack(self):
        fp = np.array([math.log(1.0 - self.p)], dtype=np.float64)
        return _kernels.GEOMETRIC, fp, _kernels._EMPTY_F64, 0.0

    def _params_dict(self):
        return {"p": self.p}


@dataclass(frozen=True)
class Poisson(OffspringSpec):
    mu: float
    family_name = "poisson"

    def __post_init__(self):
        if not self.mu > 0.0:
            raise ValueError(f"poisson: mu={self.mu} must be positive")

    def _pgf(self, s):
        return math.exp(-self.mu * (1.0 - s))

    def _one_minus_pgf(self, s):
        return -math.expm1(-self.mu * (1.0 - s))

    def _mean(self):
        return self.mu

    def _factorial2(self):
        return self.mu ** 2

    def _p0(self):
        return math.exp(-self.mu)

    def _mean_gap(self, s):
        w = self.mu * (1.0 - s)
        return w + math.expm1(-w)

    def _assumption_a(self):
        def L(x):
            w = self.mu / x
            return (w + math.expm1(-w)) * x * x

        return 2.0, L

    def _explosion_closed(self):
        return Verdict.NON_EXPLOSIVE

    def _kernel_pack(self):
        fp = np.array([self.mu], dtype=np.float64)
        return _kernels.POISSON, fp, _kernels._EMPTY_F64, 0.0

    def _params_dict(self):
        return {"mu": self.mu}


@dataclass(frozen=True)
class BirthDeath(OffspringSpec):
    """Two-point offspring on {0, 2}: birth rate a1, death rate a2 per line."""
    a1: float
    a2: float
    family_name = "birth_death"

    def __post_init__(self):
        if self.a1 < 0 or self.a2 < 0 or self.a1 + self.a2 <= 0:
            raise ValueError(f"birth_death: need a1,a2 >= 0 and a1+a2 > 0")

    @property
    def natural_rate(self) -> float:
        return self.a1 + self.a2

    def _pgf(self, s):
        return (self.a2 + self.a1 * s * s) / (self.a1 + self.a2)

    def _one_minus_pgf(self, s):
        return self.a1 * (1.0 - s) * (1.0 + s) / (self.a1 + self.a2)

    def _mean(self):
        return 2.0 * self.a1 / (self.a1 + self.a2)

    def _factorial2(self):
        return 2.0 * self.a1 / (self.a1 + self.a2)

    def _p0(self):
        return self.a2 / (self.a1 + self.a2)

    def _mean_gap(self, s):
        return self.a1 * (1.0 - s) ** 2 / (self.a1 + self.a2)

    def _assumption_a(self):
        c = self.a1 / (self.a1 + self.a2)
        return 2.0, lambda x: c

    def _extinction_closed(self):
        if self.a1 == 0.0:
            return 1.0
        return min(1.0, self.a2 / self.a1)

    def _explosion_closed(self):
        return Verdict.NON_EXPLOSIVE

    def _kernel_pack(self):
        fp = np.array([self.a2 / (self.a1 + self.a2)], dtype=np.float64)
        return _kernels.BIRTH_DEATH, fp, _kernels._EMPTY_F64, 0.0

    def _params_dict(self):
        return {"a1": self.a1, "a2": self.a2}


@dataclass(frozen=True)
class LogSupercritical(OffspringSpec):
    """p_k = 4/((k-1)k(k+1)) for k >= 2; mean 3, infinite variance."""
    family_name = "log_supercritical"

    def _pgf(self, s):
        if s == 0.0:
            return 0.0
        if s >= 1.0:
            return 1.0
        if s < 0.25:
            # closed form is 0/0-prone near 0; sum the series instead
            total, term_k = 0.0, 2
            sk = s * s
            while term_k < 80:
                term = 4.0 / ((term_k - 1) * term_k * (term_k + 1)) * sk
                total += term
                if term < 1e-19:
                    break
                sk *= s
                term_k += 1
            return total
        return 2.0 / s * (1.0 - s) ** 2 * (-math.log1p(-s)) - 2.0 + 3.0 * s

    def _one_minus_pgf(self, s):
        if s >= 1.0:
            return 0.0
        if s < 0.25:
            return 1.0 - self._pgf(s)
        w = 1.0 - s
        return w * (3.0 - 2.0 * w * (-math.log1p(-s)) / s)

    def _mean(self):
        return 3.0

    def _factorial2(self):
        return math.inf

    def _p0(self):
        return 0.0

    def _mean_gap(self, s):
        if s == 0.0:
            return 3.0 - 1.0  # m(1-0) - (1 - f(0)) = 3 - 1
        w = 1.0 - s
        return 2.0 * w * w * (-math.log1p(-s)) / s

    def _assumption_a(self):
        def L(x):
            if x == 1.0:
                return 2.0
            return 2.0 * math.log(x) / (1.0 - 1.0 / x)

        return 2.0, L

    def _extinction_closed(self):
        return 0.0

    def _explosion_closed(self):
        return Verdict.NON_EXPLOSIVE

    def _kernel_pack(self):
        return _kernels.LOG_SUPER, _kernels._EMPTY_F64, _kernels._EMPTY_F64, 0.0


@dataclass(frozen=True)
class StableCritical(OffspringSpec):
    """f(s) = s + (1-s)^alpha/alpha, alpha in (1, 2): critical, infinite variance."""
    alpha: float
    family_name = "stable_critical"

    def __post_init__(self):
        if not 1.0 < self.alpha < 2.0:
            raise ValueError(f"stable_critical: alpha={self.alpha} outside (1, 2)")

    def _pgf(self, s):
        return s + math.exp(self.alpha * math.log1p(-s)) / self.alpha if s < 1.0 else 1.0

    def _one_minus_pgf(self, s):
        w = 1.0 - s
        return w - math.exp(self.alpha * math.log1p(-s)) / self.alpha if s < 1.0 else 0.0

    def _mean(self):
        return 1.0

    def _factorial2(self):
        return math.inf

    def _p0(self):
        return 1.0 / self.alpha

    def _mean_gap(self, s):
        return math.exp(self.alpha * math.log1p(-s)) / self.alpha if s < 1.0 else 0.0

    def _assumption_a(self):
        a = self.alpha
        return a, lambda x: 1.0 / a

    def _extinction_closed(self):
        return 1.0  # critical with p1 < 1

    def _explosion_closed(self):
        return Verdict.NON_EXPLOSIVE

    def _kernel_pack(self):
        return (_kernels.TABLE_POWER, _kernels._EMPTY_F64,
                _stable_critical_tail_table(self.alpha), self.alpha)

    def _params_dict(self):
        return {"alpha": self.alpha}


@dataclass(frozen=True)
class NeveuHarmonic(OffspringSpec):
    """p_k = 1/(k(k-1)) for k >= 2; infinite mean, L(x) = 1 + log x."""
    family_name = "neveu_harmonic"

    def _pgf(self, s):
        return s + (1.0 - s) * math.log1p(-s) if s < 1.0 else 1.0

    def _one_minus_pgf(self, s):
        return (1.0 - s) * (1.0 - math.log1p(-s)) if s < 1.0 else 0.0

    def _mean(self):
        return math.inf

    def _factorial2(self):
        return math.inf

    def _p0(self):
        return 0.0

    def _tail_constants_closed(self):
        return TailConstants(A=1.0, B=1.0, provenance="closed_form")

    def _extinction_closed(self):
        return 0.0

    def _explosion_closed(self):
        return Verdict.NON_EXPLOSIVE

    def _kernel_pack(self):
        return _kernels.NEVEU, _kernels._EMPTY_F64, _kernels._EMPTY_F64, 0.0


@dataclass(frozen=True)
class GeneralizedNeveu(OffspringSpec):
    """p_0 = c, p_1 = 1-b-c, p_k = b/(k(k-1)) for k >= 2."""
    b: float
    c: float
    family_name = "generalized_neveu"

    def __post_init__(self):
        if not self.b > 0.0:
            raise ValueError(f"generalized_neveu: b={self.b} must be positive")
        if self.c < 0.0 or self.b + self.c > 1.0:
            raise ValueError(f"generalized_neveu: need c >= 0 and b+c <= 1")

    def _pgf(self, s):
        if s >= 1.0:
            return 1.0
        return s + (1.0 - s) * (self.c + self.b * math.log1p(-s))

    def _one_minus_pgf(self, s):
        if s >= 1.0:
            return 0.0
        return (1.0 - s) * (1.0 - self.c - self.b * math.log1p(-s))

    def _mean(self):
        return math.inf

    def _factorial2(self):
        return math.inf

    def _p0(self):
        return self.c

    def _tail_constants_closed(self):
        return TailConstants(A=self.b, B=1.0 - self.c, provenance="closed_form")

    def _extinction_closed(self):
        if self.c == 0.0:
            return 0.0
        return -math.expm1(-self.c / self.b)

    def _explosion_closed(self):
        return Verdict.NON_EXPLOSIVE

    def _kernel_pack(self):
        fp = np.array([self.c, 1.0 - self.b], dtype=np.float64)
        return _kernels.GEN_NEVEU, fp, _kernels._EMPTY_F64, 0.0

    def _params_dict(self):
        return {"b": self.b, "c": self.c}


@dataclass(frozen=True)
class LuriaDelbruck(OffspringSpec):
    """Discrete Luria-Delbrueck law: f(s) = (1-s)^{b(1-s)/s}, f(0) = e^{-b}.

    Equivalently compound Poisson with rate b and burst law 1/(j(j+1)),
    which is what the exact sampler uses.
    """
    b: float
    family_name = "luria_delbruck"

    def __post_init__(self):
        if not self.b > 0.0:
            raise ValueError(f"luria_delbruck: b={self.b} must be positive")

    def _pgf(self, s):
        if s == 0.0:
            return math.exp(-self.b)
        if s >= 1.0:
            return 1.0
        return math.exp(self.b * (1.0 - s) * math.log1p(-s) / s)

    def _one_minus_pgf(self, s):
        if s == 0.0:
            return -math.expm1(-self.b)
        if s >= 1.0:
            return 0.0
        return -math.expm1(self.b * (1.0 - s) * math.log1p(-s) / s)

    def _mean(self):
        return math.inf

    def _factorial2(self):
        return math.inf

    def _p0(self):
        return math.exp(-self.b)

    def _tail_constants_closed(self):
        return TailConstants(A=self.b, B=0.0, provenance="closed_form")

    def _explosion_closed(self):
        return Verdict.NON_EXPLOSIVE

    def _kernel_pack(self):
        fp = np.array([self.b], dtype=np.float64)
        return _kernels.LURIA, fp, _kernels._EMPTY_F64, 0.0

    def _params_dict(self):
        return {"b": self.b}

    def pmf(self, kmax: int) -> np.ndarray:
        """p_0..p_kmax by the compound-Poisson (Panjer) recursion."""
        p = np.zeros(kmax + 1)
        p[0] = math.exp(-self.b)
        for n in range(1, kmax + 1):
            j = np.arange(1, n + 1)
            p[n] = self.b / n * np.sum(p[n - j] / (j + 1.0))
        return p


@dataclass(frozen=True)
class SibuyaOffspring(OffspringSpec):
    """f(s) = 1 - (1-s)^alpha, alpha in (0, 1); the process explodes a.s."""
    alpha: float
    family_name = "sibuya"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"sibuya: alpha={self.alpha} outside (0, 1)")

    def _pgf(self, s):
        return -math.expm1(self.alpha * math.log1p(-s)) if s < 1.0 else 1.0

    def _one_minus_pgf(self, s):
        return math.exp(self.alpha * math.log1p(-s)) if s < 1.0 else 0.0

    def _mean(self):
        return math.inf

    def _factorial2(self):
        return math.inf

    def _p0(self):
        return 0.0

    def _tail_constants_closed(self):
        # L(x) = x^{1-alpha} grows faster than any log: A is infinite
        return TailConstants(A=math.inf, B=None, provenance="closed_form")

    def _extinction_closed(self):
        return 0.0

    def _explosion_closed(self):
        return Verdict.EXPLOSIVE

    def _kernel_pack(self):
        return (_kernels.TABLE_POWER, _kernels._EMPTY_F64,
                _sibuya_tail_table(self.alpha), self.alpha)

    def _params_dict(self):
        return {"alpha": self.alpha}


@dataclass(frozen=True)
class CustomInfo:
    mean: Optional[float] = None
    factorial2: Optional[float] = None
    tail_A: Optional[float] = None
    tail_B: Optional[float] = None


@dataclass(frozen=True)
class Custom(OffspringSpec):
    """User-supplied law: pgf callable plus either a pmf vector (exact kernel
    sampling by inversion) or a draw callable taking a CounterStream."""
    pgf: Callable[[float], float]
    sampler: object = None  # np.ndarray pmf | callable(stream) -> int | None
    metadata: Optional[CustomInfo] = None
    name: str = "custom"
    family_name = "custom"

    def __post_init__(self):
        v1 = float(self.pgf(1.0))
        if abs(v1 - 1.0) > 1e-12:
            raise ValueError(f"custom pgf: f(1)={v1} is not 1 within 1e-12")

    def _pgf(self, s):
        return float(self.pgf(s))

    def _mean(self):
        if self.metadata and self.metadata.mean is not None:
            return self.metadata.mean
        return _numeric_mean(self.pgf)

    def _factorial2(self):
        if self.metadata and self.metadata.factorial2 is not None:
            return self.metadata.factorial2
        return _numeric_factorial2(self.pgf)

    def _kernel_pack(self):
        if isinstance(self.sampler, np.ndarray):
            pmf = np.asarray(self.sampler, dtype=np.float64)
            if pmf.ndim != 1 or pmf.min() < 0 or abs(pmf.sum() - 1.0) > 1e-9:
                raise ValueError("custom pmf sampler must be a 1-d probability vector")
            tail = 1.0 - np.cumsum(pmf)  # strict tails P(xi > k)
            return _kernels.PMF_TABLE, _kernels._EMPTY_F64, np.maximum(tail, 0.0), 0.0
        raise TypeError("custom law has no kernel sampler (callable samplers "
                        "use the python path)")

    def _params_dict(self):
        return {"name": self.name}


@dataclass(frozen=True)
class ProcessParams:
    """Lifetime rate a > 0 plus an offspring law; u(s) = a (f(s) - s)."""
    a: float
    offspring: OffspringSpec

    def __post_init__(self):
        if not self.a > 0.0:
            raise ValueError(f"process rate a={self.a} must be positive")

    @classmethod
    def birth_death(cls, a1: float, a2: float) -> "ProcessParams":
        spec = BirthDeath(a1, a2)
        return cls(a=spec.natural_rate, offspring=spec)

    def u(self, s: float) -> float:
        return self.a * (pgf_eval(self.offspring, s) - s)


# --------------------------------------------------------------------------
# tail tables for the power-tailed laws
# --------------------------------------------------------------------------

def _stable_critical_tail_table(alpha: float) -> np.ndarray:
    key = ("stable_critical", alpha)
    tab = _table_cache.get(key)
    if tab is None:
        k = np.arange(2, _TAIL_TABLE_LEN + 1, dtype=np.float64)
        t1 = (alpha - 1.0) / alpha
        tab = np.empty(_TAIL_TABLE_LEN + 1)
        tab[0] = t1  # P(xi > 0) = 1 - p0 = (alpha-1)/alpha
        tab[1] = t1  # p1 = 0
        tab[2:] = t1 * np.cumprod((k - alpha) / k)
        tab.setflags(write=False)
        _table_cache[key] = tab
    return tab


def _sibuya_tail_table(alpha: float) -> np.ndarray:
    key = ("sibuya", alpha)
    tab = _table_cache.get(key)
    if tab is None:
        k = np.arange(1, _TAIL_TABLE_LEN + 1, dtype=np.float64)
        tab = np.empty(_TAIL_TABLE_LEN + 1)
        tab[0] = 1.0
        tab[1:] = np.cumprod(1.0 - alpha / k)
        tab.setflags(write=False)
        _table_cache[key] = tab
    return tab


# --------------------------------------------------------------------------
# operations
# --------------------------------------------------------------------------

def pgf_eval(spec: OffspringSpec, s: float) -> float:
    """f(s) for s in [0, 1]; continuous, with f(1) = 1."""
    s = float(s)
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"pgf argument s={s} outside [0, 1]")
    v = spec._pgf(s)
    return min(1.0, max(0.0, v))


def sample_offspring(spec: OffspringSpec, stream: CounterStream) -> int:
    """One exact draw from the offspring law, consuming the given stream."""
    if isinstance(spec, Custom) and callable(spec.sampler):
        v = int(spec.sampler(stream))
        if v < 0:
            raise ValueError("custom sampler returned a negative value")
        return v
    family, fp, tail, tail_alpha = spec._kernel_pack()
    value, new_k = _kernels._offspring_draw(family, fp, tail, tail_alpha,
                                            stream.base, stream.counter)
    stream.counter = int(new_k)
    return int(value)


def sample_offspring_many(spec: OffspringSpec, stream: CounterStream,
                          count: int) -> np.ndarray:
    if isinstance(spec, Custom) and callable(spec.sampler):
        return np.array([sample_offspring(spec, stream) for _ in range(count)],
                        dtype=np.int64)
    family, fp, tail, tail_alpha = spec._kernel_pack()
    out, new_k = _kernels.offspring_batch(family, fp, tail, tail_alpha,
                                          stream.base, stream.counter, count)
    stream.counter = int(new_k)
    return out


def moment_profile(params: ProcessParams) -> MomentProfile:
    spec = params.offspring
    approx = False
    m = spec._mean()
    f2 = spec._factorial2()
    if isinstance(spec, Custom) and (spec.metadata is None
                                     or spec.metadata.mean is None
                                     or spec.metadata.factorial2 is None):
        approx = True
    lam = params.a * (m - 1.0) if math.isfinite(m) else math.inf
    tau2 = params.a * f2 if math.isfinite(f2) else math.inf
    return MomentProfile(mean_m=m, lam=lam, tau2=tau2,
                         second_moment_finite=math.isfinite(f2),
                         approximate=approx)


def slowly_varying_L(spec: OffspringSpec, x: float) -> float:
    """L(x) = x (1 - f(1 - 1/x)) for x >= 1; strictly increasing when m is infinite."""
    x = float(x)
    if x < 1.0:
        raise ValueError(f"slowly_varying_L: x={x} below 1")
    if isinstance(spec, NeveuHarmonic):
        return 1.0 + math.log(x)
    if isinstance(spec, GeneralizedNeveu):
        return 1.0 - spec.c + spec.b * math.log(x)
    if isinstance(spec, SibuyaOffspring):
        return x ** (1.0 - spec.alpha)
    if isinstance(spec, LuriaDelbruck):
        if x == 1.0:
            return -math.expm1(-spec.b)
        # x(1 - x^{b/(1-x)}) without cancellation
        return -x * math.expm1(spec.b * math.log(x) / (1.0 - x))
    return x * spec._one_minus_pgf(1.0 - 1.0 / x)


def assumption_a(spec: OffspringSpec):
    """(alpha, L) with 1-f(s) = m(1-s) - (1-s)^alpha L((1-s)^{-1}), or None."""
    return spec._assumption_a()


def mean_gap(spec: OffspringSpec, s: float) -> float:
    """m(1-s) - (1-f(s)) in a cancellation-safe form (finite-mean laws)."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"mean_gap: s={s} outside [0, 1]")
    return spec._mean_gap(float(s))


def tail_constants(spec: OffspringSpec, kmax_exp: int = 12) -> TailConstants:
    """A = lim L(x)/log x and B = lim (L(x) - A log x) for infinite-mean laws.

    Catalog laws use closed forms; anything else is extrapolated numerically
    on x = 10^k, k = 2..kmax_exp, with Richardson acceleration in 1/k.
    """
    closed = spec._tail_constants_closed()
    if closed is not None:
        return closed
    if isinstance(spec, Custom) and spec.metadata and spec.metadata.tail_A is not None:
        return TailConstants(A=spec.metadata.tail_A, B=spec.metadata.tail_B,
                             provenance="closed_form")
    m = spec._mean()
    if math.isfinite(m):
        raise ValueError("tail constants are defined for infinite-mean laws only")
    ks = np.arange(2, kmax_exp + 1, dtype=float)
    Lv = np.array([slowly_varying_L(spec, 10.0 ** k) for k in ks])
    ratios = Lv / (ks * math.log(10.0))
    A, uncA = _richardson(1.0 / ks, ratios)
    diffs = np.diff(ratios)
    if A > 50.0 * max(1.0, ratios[0]) or (np.all(diffs > 0) and diffs[-1] > 0.25 * abs(ratios[-1])):
        return TailConstants(A=math.inf, B=None,
                             provenance="numeric_extrapolation", uncertainty=None)
    Bv = Lv - A * ks * math.log(10.0)
    B, uncB = _richardson(1.0 / ks, Bv)
    return TailConstants(A=float(A), B=float(B),
                         provenance="numeric_extrapolation",
                         uncertainty=float(max(uncA, uncB)))


def _neville3(h, v):
    # quadratic-in-h extrapolation to h = 0 through three nodes
    p01 = v[1] + (v[1] - v[0]) * h[1] / (h[0] - h[1])
    p12 = v[2] + (v[2] - v[1]) * h[2] / (h[1] - h[2])
    return p12 + (p12 - p01) * h[2] / (h[0] - h[2])


def _richardson(h: np.ndarray, v: np.ndarray):
    """Sliding three-point Richardson extrapolation of v(h) to h -> 0.

    Returns (value, uncertainty), the uncertainty being the change over the
    last sliding window; higher Neville orders amplify noise on log-speed
    sequences, three points do not.
    """
    h = np.asarray(h, dtype=float)
    v = np.asarray(v, dtype=float)
    if len(v) < 3:
        return v[-1], abs(v[-1] - v[0])
    best = _neville3(h[-3:], v[-3:])
    prev = _neville3(h[-4:-1], v[-4:-1]) if len(v) >= 4 else v[-1]
    return best, abs(best - prev)


def extinction_probability(params: ProcessParams) -> float:
    """Smallest fixed point of f in [0, 1] (per line started from one individual)."""
    spec = params.offspring
    closed = spec._extinction_closed()
    if closed is not None:
        return float(closed)
    p0 = spec._p0()
    if p0 == 0.0:
        return 0.0
    prof = moment_profile(params)
    if math.isfinite(prof.mean_m) and prof.lam <= 0.0:
        return 1.0
    # supercritical (possibly infinite-mean) with p0 > 0: bisect f(s) - s
    g = lambda s: pgf_eval(spec, s) - s
    hi = None
    for j in range(1, 50):
        cand = 1.0 - 2.0 ** (-j)
        if g(cand) < 0.0:
            hi = cand
            break
    if hi is None:
        return 1.0
    lo = 0.0
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def check_non_explosion(params: ProcessParams, kmax_exp: int = 12) -> Verdict:
    """Explosion criterion: the process is non-explosive iff
    int_eps^1 ds/(s - f(s)) diverges for eps in (q, 1).

    Catalog laws are decided analytically; Custom laws get a numeric probe of
    the improper integral in panels s in [1-10^-k, 1-10^-(k+1)].
    """
    spec = params.offspring
    closed = spec._explosion_closed()
    if closed is not None:
        return closed
    prof = moment_profile(params)
    if math.isfinite(prof.mean_m):
        return Verdict.NON_EXPLOSIVE
    from scipy.integrate import quad

    q = extinction_probability(params)
    y0 = max(1.0, -math.log10(1.0 - q) + 1.0) if q > 0 else 1.0

    def integrand(y):
        s = 1.0 - 10.0 ** (-y)
        denom = spec._one_minus_pgf(s) - (1.0 - s)  # = s - f(s)
        if denom <= 0.0:
            return math.inf
        return math.log(10.0) * 10.0 ** (-y) / denom

    panels = []
    for k in range(int(y0), kmax_exp):
        val, _ = quad(integrand, k, k + 1, limit=200)
        panels.append(val)
    panels = np.array(panels)
    if np.any(~np.isfinite(panels)) or panels.min() <= 0:
        return Verdict.INCONCLUSIVE
    ks = np.arange(int(y0), kmax_exp, dtype=float) + 0.5
    tail = panels[-6:]
    ktail = ks[-6:]
    # P_k ~ k^{-beta}: beta <= 1 means the integral diverges (non-explosive)
    beta = -np.polyfit(np.log(ktail), np.log(tail), 1)[0]
    # exponential decay fit quality: explosive laws decay geometrically
    expo = -np.polyfit(ktail, np.log(tail), 1)[0]
    if expo > 0.2 and np.exp(-expo) < 0.82:
        return Verdict.EXPLOSIVE
    if beta <= 1.05:
        return Verdict.NON_EXPLOSIVE
    if beta >= 1.6:
        return Verdict.EXPLOSIVE
    return Verdict.INCONCLUSIVE


# numeric moment probes for Custom laws lacking metadata
def _numeric_mean(pgf) -> float:
    # (1 - f(1-h))/h converges to m; log-slow divergence means m is infinite,
    # so probe at widely separated h and look at the increments
    hs = (1e-3, 1e-6, 1e-9)
    v = [(1.0 - float(pgf(1.0 - h))) / h for h in hs]
    d1, d2 = v[1] - v[0], v[2] - v[1]
    if d2 > 0.5 * d1 and d2 > 1e-6 * max(1.0, abs(v[2])):
        return math.inf
    hs2 = np.array([1e-5, 5e-6, 2.5e-6])
    v2 = np.array([(1.0 - float(pgf(1.0 - h))) / h for h in hs2])
    val, _ = _richardson(hs2, v2)
    return float(val)


def _numeric_factorial2(pgf) -> float:
    m = _numeric_mean(pgf)
    if not math.isfinite(m):
        return math.inf
    hs = (1e-2, 1e-3, 1e-4)
    v = [2.0 * (m * h - (1.0 - float(pgf(1.0 - h)))) / (h * h) for h in hs]
    if v[2] > 2.0 * v[1] + 1e-9 and v[1] > 2.0 * v[0]:
        return math.inf
    hs2 = np.array([4e-4, 2e-4, 1e-4])
    v2 = np.array([2.0 * (m * h - (1.0 - float(pgf(1.0 - h)))) / (h * h) for h in hs2])
    val, _ = _richardson(hs2, v2)
    return float(val)


# --------------------------------------------------------------------------
# JSON wire format {"family": str, "params": {...}}
# --------------------------------------------------------------------------

_FAMILIES = {
    "geometric": Geometric,
    "poisson": Poisson,
    "birth_death": BirthDeath,
    "log_supercritical": LogSupercritical,
    "stable_critical": StableCritical,
    "neveu_harmonic": NeveuHarmonic,
    "generalized_neveu": GeneralizedNeveu,
    "luria_delbruck": LuriaDelbruck,
    "sibuya": SibuyaOffspring,
}


def spec_to_json(spec: OffspringSpec) -> dict:
    if isinstance(spec, Custom):
        raise TypeError("custom offspring laws are not JSON-serializable")
    return {"family": spec.family_name, "params": spec._params_dict()}


def spec_from_json(obj: dict) -> OffspringSpec:
    family = obj.get("family")
    if family not in _FAMILIES:
        raise ValueError(f"unknown offspring family {family!r}")
    return _FAMILIES[family](**obj.get("params", {}))
