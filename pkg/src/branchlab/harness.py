"""Simulate, rescale and compare against exact limit samples.

One experiment is: build the regime's limit profile, simulate an ensemble of
rescaled populations, draw the same number of exact limit variates per grid
time, and run a two-sample Kolmogorov-Smirnov test per time, plus covariance
checks in the Gaussian regime or Laplace-transform checks in the stable ones.
Two-sample KS against sampled limits (rather than analytic CDFs) is used
because stable CDFs have no closed form outside special cases, while the
samplers are independently pinned by their Laplace transforms.

Reports are deterministic functions of their config, including the seed:
wall-clock timing is printed, never written into the report files.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .limits import (CsbpProfile, ExplosiveProfile, GaussianLimitProfile,
                     StableOUProfile)
from .offspring import ProcessParams, spec_to_json
from .simulate import ScaledEnsemble, SimConfig, rescale, simulate_ensemble
from .stable import (empirical_laplace, sample_gaussian, sample_one_sided,
                     sample_spectrally_positive)
from .streams import PURPOSE_COVARIANCE, PURPOSE_LIMIT, CounterStream, derive_key

KS_SIGNIFICANCE_DEFAULT = 0.01


def ks_threshold_constant(significance: float) -> float:
    """c(sig) of the asymptotic two-sample KS threshold; c(0.01) = 1.628."""
    if not 0.0 < significance < 1.0:
        raise ValueError("significance must be inside (0, 1)")
    return math.sqrt(-math.log(significance / 2.0) / 2.0)


@dataclass(frozen=True)
class KsResult:
    statistic: float
    n1: int
    n2: int
    significance: float
    threshold: float
    passed: bool

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "n1": self.n1, "n2": self.n2,
                "significance": self.significance, "threshold": self.threshold,
                "pass": self.passed}


def ks_two_sample(x, y, significance: float = KS_SIGNIFICANCE_DEFAULT) -> KsResult:
    """Sup distance of the two empirical CDFs, via one merged sort."""
    x = np.sort(np.asarray(x, dtype=float))
    y = np.sort(np.asarray(y, dtype=float))
    if x.size == 0 or y.size == 0:
        raise ValueError("ks_two_sample needs two nonempty samples")
    allv = np.concatenate([x, y])
    fx = np.searchsorted(x, allv, side="right") / x.size
    fy = np.searchsorted(y, allv, side="right") / y.size
    stat = float(np.max(np.abs(fx - fy)))
    thr = ks_threshold_constant(significance) * math.sqrt((x.size + y.size)
                                                          / (x.size * y.size))
    return KsResult(statistic=stat, n1=int(x.size), n2=int(y.size),
                    significance=significance, threshold=thr,
                    passed=stat <= thr)


def ks_one_sample(x, cdf, significance: float = KS_SIGNIFICANCE_DEFAULT) -> KsResult:
    """Sup distance of the empirical CDF from an exact CDF callable."""
    x = np.sort(np.asarray(x, dtype=float))
    if x.size == 0:
        raise ValueError("ks_one_sample needs a nonempty sample")
    f = np.asarray(cdf(x), dtype=float)
    n = x.size
    up = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    stat = float(max(np.max(np.abs(up - f)), np.max(np.abs(f - lo))))
    thr = ks_threshold_constant(significance) / math.sqrt(n)
    return KsResult(statistic=stat, n1=int(n), n2=0,
                    significance=significance, threshold=thr,
                    passed=stat <= thr)


def covariance_error(scaled: ScaledEnsemble, profile: GaussianLimitProfile,
                     pairs) -> tuple:
    """Max relative error of empirical Cov(X_s, X_t) against
    m(|s-t|) sigma^2(min(s,t)) over the given (s, t) pairs.

    Pairs with min(s, t) = 0 are excluded (the limit variance vanishes).
    Returns (max_rel_error, rows)."""
    if scaled.regime != "gaussian":
        raise ValueError("covariance check applies to the gaussian regime")
    grid = list(scaled.grid)
    rows = []
    worst = 0.0
    for s, t in pairs:
        if min(s, t) <= 0.0:
            continue
        try:
            i, j = grid.index(float(s)), grid.index(float(t))
        except ValueError as exc:
            raise ValueError(f"pair ({s}, {t}) not on the simulation grid") from exc
        xs, xt = scaled.values[i], scaled.values[j]
        emp = float(np.cov(xs, xt, ddof=1)[0, 1])
        theory = profile.covariance(s, t)
        rel = abs(emp - theory) / profile.sigma2(min(s, t))
        rows.append({"s": float(s), "t": float(t), "empirical": emp,
                     "theory": theory, "rel_error": rel})
        worst = max(worst, rel)
    return worst, rows


@dataclass(frozen=True)
class CovarianceCheck:
    pairs: tuple
    replicates: int
    max_rel_error: float = 0.05


@dataclass(frozen=True)
class ExperimentConfig:
    id: str
    regime: str
    params: ProcessParams
    initial_n: int
    replicates: int
    grid: tuple
    seed: int
    limit_draws: Optional[int] = None  # default: replicates
    significance: float = KS_SIGNIFICANCE_DEFAULT
    explosion_cap: int = 10 ** 9
    laplace_etas: tuple = (0.25, 0.5, 1.0)
    covariance: Optional[CovarianceCheck] = None

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be positive")
        if self.initial_n < 1:
            raise ValueError("initial_n must be positive")
        if not self.grid:
            raise ValueError("grid must be nonempty")


@dataclass
class Report:
    id: str
    regime: str
    params: dict
    seed: int
    checks: list
    passed: bool
    info: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"id": self.id, "regime": self.regime, "params": self.params,
                "seed": self.seed, "checks": self.checks, "pass": self.passed,
                "info": self.info}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def csv_rows(self):
        header = ["type", "time_s", "time_t", "statistic", "threshold", "pass", "detail"]
        rows = [header]
        for c in self.checks:
            rows.append([c["type"],
                         "" if c["time_s"] is None else repr(c["time_s"]),
                         "" if c["time_t"] is None else repr(c["time_t"]),
                         repr(c["statistic"]), repr(c["threshold"]),
                         int(c["pass"]), c.get("detail", "")])
        return rows


def _check_row(kind, time_s, time_t, statistic, threshold, passed, detail=""):
    return {"type": kind, "time_s": time_s, "time_t": time_t,
            "statistic": float(statistic), "threshold": float(threshold),
            "pass": bool(passed), "detail": detail}


def _build_profile(config: ExperimentConfig):
    if config.regime == "gaussian":
        return GaussianLimitProfile.from_params(config.params)
    if config.regime == "stable_ou":
        return StableOUProfile.from_params(config.params)
    if config.regime == "csbp":
        return CsbpProfile.from_params(config.params)
    if config.regime == "explosive_conditional":
        return ExplosiveProfile.from_params(config.params)
    raise ValueError(f"unknown regime {config.regime!r}")


def _limit_draws(config: ExperimentConfig, profile, t: float, j: int,
                 count: int) -> np.ndarray:
    stream = CounterStream(base=derive_key(config.seed, PURPOSE_LIMIT, j))
    if config.regime == "gaussian":
        return sample_gaussian(profile.sigma2(t), stream, count)
    if config.regime == "stable_ou":
        return sample_spectrally_positive(profile.alpha, profile.c(t), stream, count)
    if config.regime == "csbp":
        return sample_one_sided(profile.alpha_t(t), profile.beta_t(t), stream, count)
    # explosive_conditional: dividing by a_n(t) = (n alpha(t) beta(t))^{1/alpha(t)}
    # absorbs beta(t); the conditional limit transform is exp(-lam^a(t)/a(t))
    at = profile.alpha_t(t)
    return sample_one_sided(at, 1.0 / at, stream, count)


def _laplace_target(config: ExperimentConfig, profile, t: float, eta: float) -> float:
    if config.regime == "stable_ou":
        return math.exp(profile.c(t) * eta ** profile.alpha / profile.alpha)
    if config.regime == "csbp":
        return math.exp(-profile.beta_t(t) * eta ** profile.alpha_t(t))
    at = profile.alpha_t(t)
    return math.exp(-eta ** at / at)


def run_experiment(config: ExperimentConfig) -> Report:
    """Simulate, rescale, compare; returns the machine-readable Report."""
    profile = _build_profile(config)  # also validates regime/params coherence
    horizon = max(config.grid)
    sim_cfg = SimConfig(initial_n=config.initial_n, grid=config.grid,
                        horizon=horizon, replicates=config.replicates,
                        seed=config.seed, explosion_cap=config.explosion_cap)
    ensemble = simulate_ensemble(config.params, sim_cfg)
    scaled = rescale(ensemble, config.regime, profile)
    m_draws = config.limit_draws or config.replicates
    checks = []
    info = {"initial_n": config.initial_n, "replicates": config.replicates,
            "limit_draws": m_draws,
            "marginal_comparison_only": True,
            "dropped": [int(d) for d in scaled.dropped],
            "censor_points": [None if c is None else float(c)
                              for c in scaled.censor_points]}
    for j, t in enumerate(scaled.grid):
        sim_vals = scaled.values[j]
        if sim_vals.size == 0:
            checks.append(_check_row("ks", float(t), None, 1.0, 0.0, False,
                                     "no replicates survived conditioning"))
            continue
        limit_vals = _limit_draws(config, profile, float(t), j, m_draws)
        cen = scaled.censor_points[j]
        if cen is not None:
            # capped simulation values sit at the censor point; clip the limit
            # sample at the same point so both laws are compared censored
            limit_vals = np.minimum(limit_vals, cen)
        ks = ks_two_sample(sim_vals, limit_vals, config.significance)
        checks.append(_check_row("ks", float(t), None, ks.statistic,
                                 ks.threshold, ks.passed))
        if config.regime in ("stable_ou", "csbp", "explosive_conditional"):
            for eta in config.laplace_etas:
                est = empirical_laplace(sim_vals, float(eta))
                target = _laplace_target(config, profile, float(t), float(eta))
                z = abs(est.estimate - target) / max(est.standard_error, 1e-300)
                checks.append(_check_row("laplace", float(t), None, z, 3.0,
                                         z <= 3.0, f"eta={eta}"))
    if config.covariance is not None:
        if config.regime != "gaussian":
            raise ValueError("covariance checks apply to the gaussian regime")
        cov_grid = tuple(sorted({float(v) for st in config.covariance.pairs
                                 for v in st}))
        cov_seed = int(derive_key(config.seed, PURPOSE_COVARIANCE))
        cov_cfg = SimConfig(initial_n=config.initial_n, grid=cov_grid,
                            horizon=max(cov_grid),
                            replicates=config.covariance.replicates,
                            seed=cov_seed, explosion_cap=config.explosion_cap)
        cov_scaled = rescale(simulate_ensemble(config.params, cov_cfg),
                             "gaussian", profile)
        _worst, rows = covariance_error(cov_scaled, profile,
                                        config.covariance.pairs)
        for row in rows:
            checks.append(_check_row("covariance", row["s"], row["t"],
                                     row["rel_error"],
                                     config.covariance.max_rel_error,
                                     row["rel_error"] <= config.covariance.max_rel_error))
    passed = all(c["pass"] for c in checks)
    try:
        params_echo = {"rate_a": config.params.a,
                       "offspring": spec_to_json(config.params.offspring)}
    except TypeError:
        params_echo = {"rate_a": config.params.a,
                       "offspring": {"family": "custom"}}
    return Report(id=config.id, regime=config.regime, params=params_echo,
                  seed=config.seed, checks=checks, passed=passed, info=info)


@dataclass(frozen=True)
class ExplosionStudyConfig:
    id: str
    params: ProcessParams
    initial_n: int
    replicates: int
    seed: int
    explosion_cap: int = 10 ** 7
    horizon: float = 200.0
    probe_times: tuple = ()
    mean_rel_tol: float = 0.05
    check_cap_doubling: bool = True
    cap_doubling_rel_tol: float = 0.01


def run_explosion_study(config: ExplosionStudyConfig) -> Report:
    """Explosion-time statistics against the explosive profile's formulas.

    Checks the sample mean of the cap-hitting time against the closed-form
    mean explosion time, the exploded-by-t fractions against P(Z_t = inf),
    and (optionally) that doubling the cap moves the mean by less than the
    stated tolerance.
    """
    from .simulate import explosion_times

    profile = ExplosiveProfile.from_params(config.params)
    sim_cfg = SimConfig(initial_n=config.initial_n, grid=(),
                        horizon=config.horizon, replicates=config.replicates,
                        seed=config.seed, explosion_cap=config.explosion_cap)
    times, censored = explosion_times(config.params, sim_cfg)
    n_obs = int((~censored).sum())
    checks = []
    info = {"replicates": config.replicates, "censored": int(censored.sum()),
            "initial_n": config.initial_n, "explosion_cap": config.explosion_cap}
    expected = profile.mean_explosion_time() if config.initial_n == 1 else None
    if n_obs:
        obs = times[~censored]
        mean_t = float(obs.mean())
        se_t = float(obs.std(ddof=1) / math.sqrt(n_obs))
        info.update(mean_T=mean_t, se_T=se_t)
        if expected is not None:
            info["expected_T"] = expected
            rel = abs(mean_t - expected) / expected
            checks.append(_check_row("mean_explosion_time", None, None, rel,
                                     config.mean_rel_tol,
                                     rel <= config.mean_rel_tol))
    for t in config.probe_times:
        frac = float((times[~censored] <= t).sum()) / config.replicates
        p = profile.p_infinity(float(t)) if config.initial_n == 1 else (
            1.0 - (1.0 - profile.p_infinity(float(t))) ** config.initial_n)
        se = math.sqrt(max(p * (1.0 - p), 1e-12) / config.replicates)
        z = abs(frac - p) / se
        checks.append(_check_row("explosion_fraction", float(t), None, z, 3.0,
                                 z <= 3.0, f"frac={frac:.5f} target={p:.5f}"))
    if config.check_cap_doubling and n_obs:
        dbl_cfg = SimConfig(initial_n=config.initial_n, grid=(),
                            horizon=config.horizon,
                            replicates=config.replicates, seed=config.seed,
                            explosion_cap=2 * config.explosion_cap)
        times2, censored2 = explosion_times(config.params, dbl_cfg)
        mean2 = float(times2[~censored2].mean())
        rel = abs(mean2 - info["mean_T"]) / info["mean_T"]
        info["mean_T_doubled_cap"] = mean2
        checks.append(_check_row("cap_doubling", None, None, rel,
                                 config.cap_doubling_rel_tol,
                                 rel <= config.cap_doubling_rel_tol))
    passed = all(c["pass"] for c in checks) if checks else bool(n_obs)
    params_echo = {"rate_a": config.params.a,
                   "offspring": spec_to_json(config.params.offspring)}
    return Report(id=config.id, regime="explosion", params=params_echo,
                  seed=config.seed, checks=checks, passed=passed, info=info)
