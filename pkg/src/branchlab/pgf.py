"""Marginal pgf F(s,t) = E s^{Z_t} of the branching process.

Five catalog laws admit explicit inversions of the backward equation
dF/dt = u(F) = a(f(F) - F), F(s,0) = s, and are evaluated in closed form;
everything else is integrated with an adaptive embedded Runge-Kutta 5(4)
scheme (scipy's RK45).  The closed forms are written around 1 - F to stay
cancellation-free near s = 1, where the limit-law residual diagnostics live.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .offspring import (Custom, GeneralizedNeveu, LogSupercritical,
                        NeveuHarmonic, ProcessParams, SibuyaOffspring,
                        StableCritical, assumption_a, moment_profile,
                        pgf_eval, tail_constants)
from .special import lambert_w_lower_log


@dataclass(frozen=True)
class SolverConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("solver tolerances must be positive")


DEFAULT_SOLVER = SolverConfig()


class SolverFailure(RuntimeError):
    def __init__(self, message, reached_time):
        super().__init__(f"{message} (integration reached t={reached_time:.6g})")
        self.reached_time = reached_time


class CancellationWarning(RuntimeWarning):
    """Residual numerator is below the trustworthy cancellation floor."""


_CLOSED_FAMILIES = (NeveuHarmonic, GeneralizedNeveu, StableCritical,
                    LogSupercritical, SibuyaOffspring)


def has_closed_form(params: ProcessParams) -> bool:
    return isinstance(params.offspring, _CLOSED_FAMILIES)


# ---- closed forms, written as 1 - F ---------------------------------------

def _one_minus_F_closed(params: ProcessParams, s: float, t: float) -> float:
    spec, a = params.offspring, params.a
    if s >= 1.0 and not isinstance(spec, SibuyaOffspring):
        return 0.0  # non-explosive: F(1, t) = 1
    if s >= 1.0:
        w_log = -math.inf  # log(1 - s)
    else:
        w_log = math.log1p(-s)
    if isinstance(spec, NeveuHarmonic):
        return math.exp(math.exp(-a * t) * w_log)
    if isinstance(spec, GeneralizedNeveu):
        al = math.exp(-a * spec.b * t)
        return math.exp(al * w_log + spec.c / spec.b * (al - 1.0))
    if isinstance(spec, StableCritical):
        al = spec.alpha
        base = (al - 1.0) / al * a * t + math.exp((1.0 - al) * w_log)
        return base ** (1.0 / (1.0 - al))
    if isinstance(spec, SibuyaOffspring):
        al = spec.alpha
        decay = math.exp(-(1.0 - al) * a * t)
        inner = (1.0 - decay) + decay * math.exp((1.0 - al) * w_log)
        return inner ** (1.0 / (1.0 - al))
    if isinstance(spec, LogSupercritical):
        if s <= 0.0:
            # v(s) -> 0/0 at s = 0; fall back on the ODE there
            raise ValueError("log_supercritical closed form needs s in (0, 1]")
        if s >= 1.0:
            return 0.0
        v_s = w_log - math.log(s + (1.0 - s) * w_log)
        y = 2.0 * a * t + v_s
        # 1 - F = -1/W_{-1}(h) with log(-h) = -1 - exp(-y)
        ell = -1.0 - math.exp(-y) if y > -700.0 else -math.inf
        if not math.isfinite(ell):
            raise SolverFailure("log_supercritical closed form out of range", 0.0)
        return -1.0 / lambert_w_lower_log(ell)
    raise TypeError(f"no closed-form pgf for {spec.family_name}")


def _F_ode(params: ProcessParams, s: float, t_eval, config: SolverConfig) -> np.ndarray:
    spec, a = params.offspring, params.a
    t_eval = np.atleast_1d(np.asarray(t_eval, dtype=float))
    t_end = float(t_eval.max())
    if t_end == 0.0:
        return np.full(t_eval.shape, s)

    def rhs(_t, y):
        x = min(1.0, max(0.0, y[0]))
        return (a * (spec._pgf(x) - x),)

    sol = solve_ivp(rhs, (0.0, t_end), [float(s)], method="RK45",
                    rtol=config.rel_tol, atol=config.abs_tol,
                    max_step=config.max_step, t_eval=np.sort(t_eval),
                    dense_output=True)
    if not sol.success:
        raise SolverFailure(f"backward-equation solver failed: {sol.message}",
                            sol.t[-1] if len(sol.t) else 0.0)
    order = np.argsort(np.argsort(t_eval))
    vals = sol.y[0][order] if len(t_eval) > 1 else sol.y[0]
    return np.clip(vals, 0.0, 1.0)


def evaluate_F(params: ProcessParams, s: float, t: float,
               config: SolverConfig = DEFAULT_SOLVER, method: str = "auto") -> float:
    """F(s, t) in [0, 1]; method is "auto", "closed" or "ode".

    For explosive laws evaluate_F(1, t) returns P(Z_t < infinity) < 1.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"F(s,t): s={s} outside [0, 1]")
    if t < 0.0:
        raise ValueError(f"F(s,t): t={t} negative")
    if t == 0.0:
        return float(s)
    use_closed = method == "closed" or (method == "auto" and has_closed_form(params))
    if method == "closed" and not has_closed_form(params):
        raise TypeError(f"no closed-form pgf for {params.offspring.family_name}")
    if use_closed and not (isinstance(params.offspring, LogSupercritical) and s == 0.0):
        return min(1.0, max(0.0, 1.0 - _one_minus_F_closed(params, s, t)))
    if s == 1.0:
        # 1 is an equilibrium of the backward ODE; for explosive laws the pgf
        # leaves it immediately, so start infinitesimally below
        s = 1.0 - 1e-12
    return float(_F_ode(params, s, [t], config)[0])


def evaluate_F_grid(params: ProcessParams, s: float, t_list,
                    config: SolverConfig = DEFAULT_SOLVER, method: str = "auto") -> np.ndarray:
    """F(s, t) over several t values, sharing one integration per s."""
    t_arr = np.asarray(t_list, dtype=float)
    if method != "ode" and has_closed_form(params):
        return np.array([evaluate_F(params, s, float(t), config, method="closed")
                         for t in t_arr])
    out = np.empty(t_arr.shape)
    pos = t_arr > 0
    if np.any(pos):
        out[pos] = _F_ode(params, s if s < 1.0 else 1.0 - 1e-12, t_arr[pos], config)
    out[~pos] = s
    return out


def one_minus_F(params: ProcessParams, s: float, t: float,
                config: SolverConfig = DEFAULT_SOLVER) -> float:
    """1 - F(s, t), cancellation-free when a closed form exists."""
    if t == 0.0:
        return 1.0 - s
    if has_closed_form(params) and not (isinstance(params.offspring, LogSupercritical) and s == 0.0):
        return _one_minus_F_closed(params, s, t)
    return 1.0 - evaluate_F(params, s, t, config)


def probability_finite(params: ProcessParams, t: float,
                       config: SolverConfig = DEFAULT_SOLVER) -> float:
    """F(1, t) = P(Z_t < infinity); below 1 only for explosive laws."""
    return evaluate_F(params, 1.0, t, config)


def conditional_pgf_G(params: ProcessParams, s: float, t: float,
                      config: SolverConfig = DEFAULT_SOLVER) -> float:
    """G(s, t) = F(s, t)/F(1, t), the pgf of Z_t conditioned on being finite."""
    if t == 0.0:
        return float(s)
    if s == 1.0:
        return 1.0
    denom = probability_finite(params, t, config)
    if denom <= 0.0:
        raise ZeroDivisionError(f"P(Z_t < inf) = 0 at t={t}; G is degenerate")
    return min(1.0, evaluate_F(params, s, t, config) / denom)


def local_alpha(params: ProcessParams, t: float, s: float,
                config: SolverConfig = DEFAULT_SOLVER) -> float:
    """alpha(s, t) = (1-s) dF/ds / (1 - F); tends to e^{-aAt} as s -> 1."""
    if t == 0.0:
        return 1.0
    if s > 1.0 - 1e-9:
        raise ValueError("local_alpha: central difference unreliable beyond s = 1 - 1e-9")
    h = min(1e-6, (1.0 - s) / 10.0)
    f_plus = evaluate_F(params, s + h, t, config)
    f_minus = evaluate_F(params, s - h, t, config)
    dFds = (f_plus - f_minus) / (2.0 * h)
    return (1.0 - s) * dFds / one_minus_F(params, s, t, config)


def transfer_residual(params: ProcessParams, alpha: float, s: float, t: float,
                      config: SolverConfig = DEFAULT_SOLVER) -> float:
    """(m(t)(1-s) - (1-F(s,t))) / ((1-s)^alpha L((1-s)^{-1})) - c(t) -> 0 as s -> 1.

    Finite-mean laws satisfying 1-f(s) = m(1-s) - (1-s)^alpha L((1-s)^{-1}).
    """
    from .limits import c_profile

    data = assumption_a(params.offspring)
    if data is None:
        raise ValueError(f"{params.offspring.family_name} carries no tail-correction data")
    alpha_spec, L = data
    if abs(alpha - alpha_spec) > 1e-12:
        raise ValueError(f"alpha={alpha} does not match the variant's {alpha_spec}")
    if not 0.0 <= s < 1.0:
        raise ValueError("transfer_residual needs s in [0, 1)")
    prof = moment_profile(params)
    mt = math.exp(prof.lam * t)
    numerator = mt * (1.0 - s) - one_minus_F(params, s, t, config)
    if abs(numerator) < 1e3 * np.spacing(mt * (1.0 - s)):
        warnings.warn("transfer_residual numerator within 1e3 ulps of m(t)(1-s); "
                      "value dominated by cancellation", CancellationWarning)
    denom = (1.0 - s) ** alpha * L(1.0 / (1.0 - s))
    return numerator / denom - c_profile(params, alpha, t)


def csbp_residual(params: ProcessParams, s: float, t: float,
                  config: SolverConfig = DEFAULT_SOLVER) -> float:
    """(1 - F(s,t)) / (1-s)^{alpha(t)} - beta(t) -> 0 as s -> 1 (infinite mean)."""
    if not 0.0 <= s < 1.0:
        raise ValueError("csbp_residual needs s in [0, 1)")
    tc = tail_constants(params.offspring)
    if not (math.isfinite(tc.A) and tc.A > 0.0 and tc.B is not None):
        raise ValueError("csbp_residual needs finite positive A and finite B")
    alpha_t = math.exp(-params.a * tc.A * t)
    beta_t = math.exp((tc.B - 1.0) / tc.A * (1.0 - alpha_t))
    omf = one_minus_F(params, s, t, config)
    numerator = omf
    if numerator < 1e3 * np.spacing(1.0):
        warnings.warn("csbp_residual numerator at the cancellation floor",
                      CancellationWarning)
    return numerator / math.exp(alpha_t * math.log1p(-s)) - beta_t
