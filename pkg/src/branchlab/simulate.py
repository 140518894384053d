"""Exact event-driven simulation of the branching process.

The state is the aggregate count Z only: every individual carries an i.i.d.
Exp(a) clock, so the time to the next event is Exp(a Z) and the event
replaces one individual by a fresh offspring draw.  This is distributionally
identical to per-individual bookkeeping at O(1) state.

Explosive paths are stopped at a configurable cap: for the catalog's
explosive family growth beyond the cap is superexponential, so the
cap-to-infinity residual time is negligible (and is monitored by the
cap-doubling check in the verification suite).

Replicate r of an ensemble consumes the counter stream keyed by
(seed, replicate, r): reruns are bit-identical and replicates are
independent of scheduling.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .offspring import Custom, ProcessParams, sample_offspring
from .streams import PURPOSE_REPLICATE, CounterStream, replicate_keys

EXPLODED = int(_kernels.EXPLODED)  # grid marker after the cap is passed

REGIMES = ("gaussian", "stable_ou", "csbp", "explosive_conditional")


@dataclass(frozen=True)
class SimConfig:
    initial_n: int
    grid: tuple
    horizon: float
    replicates: int
    seed: int
    explosion_cap: int = 10 ** 9

    def __post_init__(self):
        if self.initial_n < 1:
            raise ValueError("initial_n must be a positive integer")
        if self.replicates < 1:
            raise ValueError("replicates must be a positive integer")
        g = np.asarray(self.grid, dtype=float)
        if g.size and (np.any(np.diff(g) <= 0) or g[0] < 0):
            raise ValueError("grid must be strictly increasing and nonnegative")
        if g.size and g[-1] > self.horizon:
            raise ValueError("grid must lie within [0, horizon]")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.explosion_cap <= self.initial_n:
            raise ValueError("explosion_cap must exceed initial_n")
        object.__setattr__(self, "grid", tuple(float(x) for x in g))

    def grid_array(self) -> np.ndarray:
        return np.asarray(self.grid, dtype=float)


@dataclass(frozen=True)
class PathSample:
    grid: np.ndarray
    counts: np.ndarray  # int64; EXPLODED marker after the cap was passed
    explosion_time: Optional[float]
    censored: bool

    @property
    def exploded(self) -> bool:
        return self.explosion_time is not None


@dataclass
class Ensemble:
    params: ProcessParams
    config: SimConfig
    counts: np.ndarray          # (replicates, grid) int64
    explosion_times: np.ndarray  # nan where not exploded
    exploded: np.ndarray        # bool
    censored: np.ndarray        # bool
    events: np.ndarray          # int64 event counts per replicate

    def path(self, r: int) -> PathSample:
        et = self.explosion_times[r]
        return PathSample(grid=self.config.grid_array(),
                          counts=self.counts[r].copy(),
                          explosion_time=None if math.isnan(et) else float(et),
                          censored=bool(self.censored[r]))

    def to_csv(self, path) -> None:
        """Flat table (replicate, time, count, exploded_flag)."""
        grid = self.config.grid_array()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["replicate", "time", "count", "exploded_flag"])
            for r in range(self.counts.shape[0]):
                for j, t in enumerate(grid):
                    c = int(self.counts[r, j])
                    writer.writerow([r, repr(float(t)),
                                     "" if c == EXPLODED else c,
                                     int(c == EXPLODED)])


@dataclass
class ScaledEnsemble:
    """Per-grid-time rescaled values under one of the four regimes.

    For csbp, replicates that passed the cap are kept, pegged at the
    cap-scaled censor point (their true value is at least that); the
    comparison side must clip at the same point.  For explosive_conditional
    they are dropped, which is the conditioning itself.
    """
    regime: str
    grid: np.ndarray
    values: list  # one float array per grid time
    dropped: np.ndarray  # per grid time
    censor_points: list  # clipping threshold or None, per grid time
    initial_n: int

    def at_time(self, j: int) -> np.ndarray:
        return self.values[j]


def _kernel_inputs(params: ProcessParams):
    spec = params.offspring
    if isinstance(spec, Custom) and callable(spec.sampler):
        return None
    return spec._kernel_pack()


def simulate_path(params: ProcessParams, cfg: SimConfig,
                  stream: CounterStream) -> PathSample:
    """One trajectory recorded on cfg.grid, consuming the given stream."""
    grid = cfg.grid_array()
    pack = _kernel_inputs(params)
    counts = np.empty(grid.size, dtype=np.int64)
    if pack is None:
        et, exploded, censored, _ = _simulate_path_python(params, cfg, stream, counts)
    else:
        family, fp, tail, tail_alpha = pack
        et, exploded, censored, _nev, k = _kernels.simulate_one_kernel(
            stream.base, np.int64(stream.counter), params.a,
            np.int64(cfg.initial_n), family, fp, tail, tail_alpha,
            grid, np.int64(cfg.explosion_cap), float(cfg.horizon), counts)
        stream.counter = int(k)
    return PathSample(grid=grid, counts=counts,
                      explosion_time=float(et) if exploded else None,
                      censored=bool(censored))


def _simulate_path_python(params: ProcessParams, cfg: SimConfig,
                          stream: CounterStream, counts: np.ndarray):
    """Pure-python event loop for Custom laws with callable samplers."""
    grid = cfg.grid_array()
    z = int(cfg.initial_n)
    a = params.a
    cap = int(cfg.explosion_cap)
    t, gi, nev = 0.0, 0, 0
    et, exploded, censored = math.nan, False, False
    ng = grid.size
    while True:
        if z <= 0:
            counts[gi:] = 0
            break
        if z >= cap:
            exploded, et = True, t
            counts[gi:] = EXPLODED
            break
        t_next = t - math.log(stream.next_uniform()) / (a * z)
        while gi < ng and grid[gi] < t_next:
            counts[gi] = z
            gi += 1
        if t_next >= cfg.horizon:
            censored = True
            counts[gi:] = z
            break
        t = t_next
        z += sample_offspring(params.offspring, stream) - 1
        nev += 1
    return et, exploded, censored, nev


def simulate_ensemble(params: ProcessParams, cfg: SimConfig) -> Ensemble:
    """Replicate paths with streams keyed by (seed, replicate index)."""
    grid = cfg.grid_array()
    n_rep = cfg.replicates
    counts = np.empty((n_rep, grid.size), dtype=np.int64)
    expl_time = np.full(n_rep, np.nan)
    exploded = np.zeros(n_rep, dtype=np.bool_)
    censored = np.zeros(n_rep, dtype=np.bool_)
    events = np.zeros(n_rep, dtype=np.int64)
    pack = _kernel_inputs(params)
    bases = replicate_keys(cfg.seed, n_rep, PURPOSE_REPLICATE)
    if pack is None:
        for r in range(n_rep):
            stream = CounterStream(base=bases[r])
            et, ex, ce, nev = _simulate_path_python(params, cfg, stream, counts[r])
            expl_time[r], exploded[r], censored[r], events[r] = et, ex, ce, nev
    else:
        family, fp, tail, tail_alpha = pack
        _kernels.simulate_ensemble_kernel(
            bases, params.a, np.int64(cfg.initial_n), family, fp, tail,
            tail_alpha, grid, np.int64(cfg.explosion_cap), float(cfg.horizon),
            counts, expl_time, exploded, censored, events)
    return Ensemble(params=params, config=cfg, counts=counts,
                    explosion_times=expl_time, exploded=exploded,
                    censored=censored, events=events)


def rescale(ensemble: Ensemble, regime: str, profile) -> ScaledEnsemble:
    """Apply the regime's scaling to every (replicate, grid time) count."""
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    _check_profile(regime, profile)
    grid = ensemble.config.grid_array()
    n = ensemble.config.initial_n
    cap = ensemble.config.explosion_cap
    counts = ensemble.counts
    values, dropped, censors = [], [], []
    for j, t in enumerate(grid):
        col = counts[:, j]
        capped = col == EXPLODED
        if regime == "gaussian":
            if np.any(capped):
                raise ValueError("capped paths in a Gaussian-regime ensemble; "
                                 "raise explosion_cap")
            vals = (col - n * profile.m(t)) / math.sqrt(n)
            cen = None
        elif regime == "stable_ou":
            if np.any(capped):
                raise ValueError("capped paths in a stable-OU-regime ensemble; "
                                 "raise explosion_cap")
            vals = (col - n * profile.m(t)) / profile.normalizer(n)
            cen = None
        elif regime == "csbp":
            scale = n ** (1.0 / profile.alpha_t(t))
            vals = col / scale
            cen = None
            if np.any(capped):
                cen = cap / scale
                vals = np.where(capped, cen, vals)
        else:  # explosive_conditional
            keep = ~capped
            vals = col[keep] / profile.a_n(n, t)
            cen = None
        values.append(np.asarray(vals, dtype=float))
        dropped.append(int(capped.sum()) if regime == "explosive_conditional" else 0)
        censors.append(cen)
    return ScaledEnsemble(regime=regime, grid=grid, values=values,
                          dropped=np.asarray(dropped, dtype=int),
                          censor_points=censors, initial_n=n)


def _check_profile(regime: str, profile) -> None:
    needed = {"gaussian": ("m", "sigma2"),
              "stable_ou": ("m", "normalizer", "c"),
              "csbp": ("alpha_t", "beta_t"),
              "explosive_conditional": ("a_n", "p_infinity")}[regime]
    for attr in needed:
        if not hasattr(profile, attr):
            raise TypeError(f"profile {type(profile).__name__} does not fit "
                            f"regime {regime!r} (missing {attr})")


def sample_explosion_time(params: ProcessParams, n: int, cfg: SimConfig,
                          stream: CounterStream) -> Optional[float]:
    """First time the population reaches the cap, or None when censored at
    the horizon.  The declared time differs from the true explosion time by
    the cap-to-infinity residual."""
    run_cfg = SimConfig(initial_n=n, grid=(), horizon=cfg.horizon,
                        replicates=1, seed=cfg.seed,
                        explosion_cap=cfg.explosion_cap)
    path = simulate_path(params, run_cfg, stream)
    return path.explosion_time


def explosion_times(params: ProcessParams, cfg: SimConfig):
    """Explosion (cap-hitting) times over cfg.replicates paths.

    Returns (times, censored): times is nan where the path was censored at
    the horizon without reaching the cap.
    """
    run_cfg = SimConfig(initial_n=cfg.initial_n, grid=(), horizon=cfg.horizon,
                        replicates=cfg.replicates, seed=cfg.seed,
                        explosion_cap=cfg.explosion_cap)
    ens = simulate_ensemble(params, run_cfg)
    return ens.explosion_times, ens.censored
