"""Jit-compiled event loops and offspring draws.

Everything here consumes SplitMix64 counter streams (see streams.py): draw k
of stream `base` is mix64(base + (k+1)*GOLDEN), so the jit kernels and the
vectorized numpy stream code produce identical sequences.

Offspring families are dispatched on an integer code.  Heavy-tailed laws
whose strict tail probabilities have no O(1) inversion carry a precomputed
tail table plus a power-law continuation exponent (TABLE_POWER); the rest are
inverted in closed form.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

U64 = np.uint64
GOLDEN = U64(0x9E3779B97F4A7C15)

# offspring family codes
GEOMETRIC = 0
POISSON = 1
BIRTH_DEATH = 2
LOG_SUPER = 3
TABLE_POWER = 4
NEVEU = 5
GEN_NEVEU = 6
LURIA = 7
PMF_TABLE = 8

EXPLODED = np.int64(-1)
_MAX_JUMP = 4.0e15  # clamp for tail-continuation draws; beyond any usable cap

_EMPTY_F64 = np.empty(0, dtype=np.float64)


@njit(inline="always")
def _mix64(z):
    z = (z ^ (z >> U64(30))) * U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> U64(27))) * U64(0x94D049BB133111EB)
    return z ^ (z >> U64(31))


@njit(inline="always")
def _u01(base, k):
    # k-th uniform of the stream, strictly inside (0, 1)
    z = _mix64(base + U64(k + 1) * GOLDEN)
    return (np.float64(z >> U64(11)) + 0.5) * (2.0 ** -53)


@njit(inline="always")
def _neveu_inv(u):
    # inversion of the tail P(xi >= k) = 1/(k-1), k >= 2: xi = 1 + floor(1/u)
    v = 1.0 / u
    if v > _MAX_JUMP:
        v = _MAX_JUMP
    return np.int64(v) + 1


@njit(inline="always")
def _log_super_inv(u):
    # strict tails P(xi > k) = 2/(k(k+1)) for k >= 1; p_k = 4/((k-1)k(k+1))
    r = 8.0 / u
    if r > _MAX_JUMP * 8.0:
        r = _MAX_JUMP * 8.0
    k = np.int64((1.0 + math.sqrt(1.0 + r)) / 2.0)
    if k < 2:
        k = np.int64(2)
    # polish the float inversion: want largest k with u <= 2/((k-1)k)
    while u * (k - 1) * k > 2.0:
        k -= 1
    while u * k * (k + 1) <= 2.0:
        k += 1
    return k


@njit(inline="always")
def _table_power_inv(u, tail, alpha):
    # tail[k] = P(xi > k), strictly decreasing from some index on;
    # returns smallest k with tail[k] < u
    last = tail.shape[0] - 1
    if u > tail[0]:
        return np.int64(0)
    if u <= tail[last]:
        # continue the table with the exact power-law decay rate
        x = last * (tail[last] / u) ** (1.0 / alpha)
        if x > _MAX_JUMP:
            x = _MAX_JUMP
        return np.int64(x) + 1
    lo = np.int64(0)
    if last >= 8 and u > tail[8]:
        k = np.int64(1)
        while tail[k] >= u:
            k += 1
        return k
    hi = np.int64(last)
    # binary search: smallest index with tail[idx] < u
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tail[mid] < u:
            hi = mid
        else:
            lo = mid
    return hi


@njit(inline="always")
def _pmf_table_inv(u, tail):
    k = np.int64(0)
    last = tail.shape[0] - 1
    while k <= last and tail[k] >= u:
        k += 1
    return k


@njit
def _poisson_draw(mu, base, k):
    if mu <= 60.0:
        u = _u01(base, k)
        k += 1
        p = math.exp(-mu)
        c = p
        x = np.int64(0)
        while u > c:
            x += 1
            p *= mu / x
            c += p
            if x > 1000:
                break
        return x, k
    # Hoermann's PTRS transformed rejection, exact for large mu
    b = 0.931 + 2.53 * math.sqrt(mu)
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    v_r = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        u = _u01(base, k) - 0.5
        v = _u01(base, k + 1)
        k += 2
        us = 0.5 - abs(u)
        kk = math.floor((2.0 * a / us + b) * u + mu + 0.43)
        if us >= 0.07 and v <= v_r:
            return np.int64(kk), k
        if kk < 0.0 or (us < 0.013 and v > us):
            continue
        if (math.log(v * inv_alpha / (a / (us * us) + b))
                <= kk * math.log(mu) - mu - math.lgamma(kk + 1.0)):
            return np.int64(kk), k


@njit
def _offspring_draw(family, fp, tail, tail_alpha, base, k):
    """One offspring draw; returns (value, advanced counter)."""
    if family == GEOMETRIC:
        u = _u01(base, k)
        k += 1
        # P(xi >= j) = q^j with log q = fp[0]
        x = math.log(u) / fp[0]
        if x > _MAX_JUMP:
            x = _MAX_JUMP
        return np.int64(x), k
    if family == POISSON:
        return _poisson_draw(fp[0], base, k)
    if family == BIRTH_DEATH:
        u = _u01(base, k)
        k += 1
        if u < fp[0]:
            return np.int64(0), k
        return np.int64(2), k
    if family == LOG_SUPER:
        u = _u01(base, k)
        k += 1
        return _log_super_inv(u), k
    if family == TABLE_POWER:
        u = _u01(base, k)
        k += 1
        return _table_power_inv(u, tail, tail_alpha), k
    if family == NEVEU:
        u = _u01(base, k)
        k += 1
        return _neveu_inv(u), k
    if family == GEN_NEVEU:
        u = _u01(base, k)
        k += 1
        if u < fp[0]:
            return np.int64(0), k
        if u < fp[1]:
            return np.int64(1), k
        u2 = _u01(base, k)
        k += 1
        return _neveu_inv(u2), k
    if family == LURIA:
        # compound Poisson: N ~ Poisson(b) bursts of size floor(1/U)
        n, k = _poisson_draw(fp[0], base, k)
        total = np.int64(0)
        for _ in range(n):
            u = _u01(base, k)
            k += 1
            v = 1.0 / u
            if v > _MAX_JUMP:
                v = _MAX_JUMP
            total += np.int64(v)
            if total > np.int64(_MAX_JUMP):
                total = np.int64(_MAX_JUMP)
        return total, k
    # PMF_TABLE
    u = _u01(base, k)
    k += 1
    return _pmf_table_inv(u, tail), k


@njit
def offspring_batch(family, fp, tail, tail_alpha, base, k0, count):
    """count draws from one stream; returns (values, advanced counter)."""
    out = np.empty(count, dtype=np.int64)
    k = k0
    for i in range(count):
        out[i], k = _offspring_draw(family, fp, tail, tail_alpha, base, k)
    return out, k


@njit(inline="always")
def _run_path(base, k, rate, z0, family, fp, tail, tail_alpha,
              grid, cap, horizon, counts):
    """Aggregate-count Gillespie for one replicate.

    Writes grid-time populations into counts (EXPLODED marker after the cap
    is passed) and returns (explosion_time, exploded, censored, events,
    counter).  Grid recording is right-continuous: the value at grid time g
    is the population after the last event at or before g.
    """
    z = np.int64(z0)
    t = 0.0
    gi = 0
    ng = grid.shape[0]
    nev = np.int64(0)
    expl_t = np.nan
    exploded = False
    censored = False
    while True:
        if z <= 0:
            z = np.int64(0)
            while gi < ng:
                counts[gi] = 0
                gi += 1
            break
        if z >= cap:
            exploded = True
            expl_t = t
            while gi < ng:
                counts[gi] = EXPLODED
                gi += 1
            break
        u = _u01(base, k)
        k += 1
        t_next = t - math.log(u) / (rate * z)
        while gi < ng and grid[gi] < t_next:
            counts[gi] = z
            gi += 1
        if t_next >= horizon:
            censored = True
            while gi < ng:
                counts[gi] = z
                gi += 1
            break
        t = t_next
        xi, k = _offspring_draw(family, fp, tail, tail_alpha, base, k)
        z += xi - 1
        nev += 1
    return expl_t, exploded, censored, nev, k


@njit(cache=True, parallel=True)
def simulate_ensemble_kernel(bases, rate, z0, family, fp, tail, tail_alpha,
                             grid, cap, horizon,
                             counts, expl_time, exploded, censored, events):
    for r in prange(bases.shape[0]):
        et, ex, ce, nev, _ = _run_path(
            bases[r], np.int64(0), rate, z0, family, fp, tail, tail_alpha,
            grid, cap, horizon, counts[r])
        expl_time[r] = et
        exploded[r] = ex
        censored[r] = ce
        events[r] = nev


@njit(cache=True)
def simulate_one_kernel(base, k0, rate, z0, family, fp, tail, tail_alpha,
                        grid, cap, horizon, counts):
    return _run_path(base, k0, rate, z0, family, fp, tail, tail_alpha,
                     grid, cap, horizon, counts)
