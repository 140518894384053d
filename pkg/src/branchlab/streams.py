"""Counter-based splittable random streams (SplitMix64).

A stream is nothing but a 64-bit base key: draw number k of the stream is
``mix64(base + (k+1)*GOLDEN)``.  Because the k-th draw is a pure function of
(base, k), streams can be consumed sequentially inside the jit simulation
kernel and in bulk by vectorized numpy code, producing bit-identical
sequences, and replicate streams derived from (seed, replicate) are
reproducible independently of scheduling.
"""
from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_U53 = 2.0 ** -53

# purpose tags used to separate substream families derived from one seed
PURPOSE_REPLICATE = 1
PURPOSE_LIMIT = 2
PURPOSE_COVARIANCE = 3
PURPOSE_SPAWN = 4
PURPOSE_SELFTEST = 5


def mix64(z):
    """SplitMix64 finalizer, for uint64 scalars or arrays."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        z = z ^ (z >> np.uint64(31))
    return z if z.ndim else np.uint64(z)


def derive_key(seed, *subkeys) -> np.uint64:
    """Derive a stream base key from a seed and a chain of integer subkeys."""
    key = mix64(np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF))
    with np.errstate(over="ignore"):
        for s in subkeys:
            key = mix64(key + GOLDEN * np.uint64(int(s) & 0xFFFFFFFFFFFFFFFF) + np.uint64(1))
    return np.uint64(key)


def replicate_keys(seed, count, purpose=PURPOSE_REPLICATE) -> np.ndarray:
    """Vector of independent stream keys for replicates 0..count-1."""
    head = derive_key(seed, purpose)
    idx = np.arange(count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        keys = mix64(head + GOLDEN * idx + np.uint64(1))
    return keys.astype(np.uint64)


class CounterStream:
    """Stateful view over one counter-based stream.

    All draw methods advance the counter; two streams with equal (base,
    counter) produce equal output regardless of how draws are batched.
    """

    __slots__ = ("base", "counter")

    def __init__(self, seed=None, *subkeys, base=None):
        if base is not None:
            self.base = np.uint64(base)
        else:
            self.base = derive_key(seed, *subkeys)
        self.counter = 0

    def spawn(self, index) -> "CounterStream":
        """Independent child stream; does not advance this stream."""
        return CounterStream(base=derive_key(int(self.base), PURPOSE_SPAWN, index))

    def uniforms(self, count) -> np.ndarray:
        """count uniforms on the open interval (0, 1)."""
        ks = np.arange(self.counter + 1, self.counter + count + 1, dtype=np.uint64)
        self.counter += int(count)
        with np.errstate(over="ignore"):
            z = mix64(self.base + ks * GOLDEN)
        return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * _U53

    def next_uniform(self) -> float:
        return float(self.uniforms(1)[0])

    def exponentials(self, count) -> np.ndarray:
        return -np.log(self.uniforms(count))

    def normals(self, count) -> np.ndarray:
        """Standard normals via Box-Muller (cosine half, 2 uniforms each)."""
        u1 = self.uniforms(count)
        u2 = self.uniforms(count)
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
