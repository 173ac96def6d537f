"""Reproducible random sampling.

The generator is part of the external interface: reports produced with the
same seed must be byte-identical across runs and across implementations.
We therefore pin an explicit algorithm instead of deferring to numpy.

Algorithm: xorshift64* (Vigna's multiplier variant).  State is a single
nonzero 64-bit word.  One step is

    x ^= x >> 12;  x ^= (x << 25) & 2^64-1;  x ^= x >> 27
    output = (x * 2685821657736338717) mod 2^64

A seed of 0 is remapped to 0x9E3779B97F4A7C15 (the state must be nonzero).
Uniform doubles are ``output / 2^64`` in [0, 1).
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_MULT = 2685821657736338717
_ZERO_SEED = 0x9E3779B97F4A7C15
TWO_PI = 2.0 * np.pi


class Xorshift64Star:
    def __init__(self, seed: int):
        seed = int(seed) & _MASK
        self._state = seed if seed != 0 else _ZERO_SEED

    def next_u64(self) -> int:
        x = self._state
        x ^= x >> 12
        x = (x ^ (x << 25)) & _MASK
        x ^= x >> 27
        self._state = x
        return (x * _MULT) & _MASK

    def uniform(self, lo: float = 0.0, hi: float = 1.0) -> float:
        return lo + (hi - lo) * (self.next_u64() / 2.0**64)

    def uniforms(self, n: int, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
        return np.array([self.uniform(lo, hi) for _ in range(n)])

    def angles(self, n: int) -> np.ndarray:
        """n angles uniform on [0, 2*pi)."""
        return self.uniforms(n, 0.0, TWO_PI)


def circle_gaps(angles: np.ndarray) -> np.ndarray:
    """Pairwise circle distances (flattened upper triangle) of a 1-d angle array."""
    th = np.mod(np.asarray(angles, dtype=float), TWO_PI)
    diff = np.abs(th[:, None] - th[None, :])
    d = np.minimum(diff, TWO_PI - diff)
    iu = np.triu_indices(len(th), k=1)
    return d[iu]


def config_point(rng: Xorshift64Star, arity: int, margin: float,
                 max_tries: int = 10000) -> np.ndarray:
    """Draw angles uniformly, rejecting tuples with a pairwise gap below margin."""
    for _ in range(max_tries):
        th = rng.angles(arity)
        if len(th) < 2 or circle_gaps(th).min() >= margin:
            return th
    raise RuntimeError(f"could not sample a margin-{margin} configuration "
                       f"of {arity} points in {max_tries} tries")


def config_points(rng: Xorshift64Star, count: int, arity: int, margin: float) -> np.ndarray:
    """(count, arity) array of margin-separated configurations.

    Points are drawn sequentially, so the first k rows for a given seed do not
    depend on count (sup estimates grow monotonically with the sample budget).
    """
    return np.array([config_point(rng, arity, margin) for _ in range(count)])
