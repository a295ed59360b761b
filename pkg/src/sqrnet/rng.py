"""Deterministic, splittable pseudo-random generation.

Every stochastic component of the library draws from an :class:`Rng`,
which wraps a counter-based Philox generator keyed by ``(seed, stream)``.
Distinct keys give statistically independent streams, so sub-streams for
"trial 3, data", "trial 3, init", etc. can be created in any order, on any
thread, and always reproduce the same values.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    """Bijective 64-bit mixer; spreads structured stream ids over the key space."""
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class Rng:
    """Reproducible random stream addressed by ``(seed, stream)``.

    Parameters
    ----------
    seed : int
        User-facing seed. The same seed always reproduces the same tree
        of streams.
    stream : int
        Internal sub-stream key; leave at 0 and derive children with
        :meth:`split`.
    """

    __slots__ = ("seed", "stream", "_gen")

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed) & _MASK64
        self.stream = int(stream) & _MASK64
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def split(self, stream_id: int) -> "Rng":
        """Derive an independent, reproducible child stream.

        Children of distinct ``stream_id`` (and children of children) never
        collide in practice: ids are mixed into the 64-bit key space.
        """
        child = _splitmix64(self.stream ^ _splitmix64(int(stream_id) & _MASK64))
        return Rng(self.seed, child)

    # -- draw helpers (thin wrappers, all deterministic per key) ------------

    def uniform(self, n: int | None = None, low: float = 0.0, high: float = 1.0):
        return self._gen.uniform(low, high, size=n)

    def standard_normal(self, n: int | None = None):
        return self._gen.standard_normal(size=n)

    def chisquare(self, df: float, n: int | None = None):
        return self._gen.chisquare(df, size=n)

    def permutation(self, n: int) -> np.ndarray:
        return self._gen.permutation(n)

    def integers(self, low: int, high: int, n: int | None = None):
        return self._gen.integers(low, high, size=n)

    def __repr__(self) -> str:  # pragma: no cover
        return f"Rng(seed={self.seed}, stream={self.stream})"


def as_rng(seed_or_rng: "int | Rng") -> Rng:
    """Accept either a plain integer seed or an existing :class:`Rng`."""
    if isinstance(seed_or_rng, Rng):
        return seed_or_rng
    return Rng(int(seed_or_rng))
