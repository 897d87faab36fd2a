"""Splittable, recorded random sources.

Every stochastic routine takes a :class:`SeededRng`; shards get independent
children spawned from the run seed, so results only depend on the seed and
the shard layout.
"""

from __future__ import annotations

import numpy as np

__all__ = ["SeededRng"]


class SeededRng:
    def __init__(self, seed: int | np.random.SeedSequence = 0):
        if isinstance(seed, np.random.SeedSequence):
            self._seq = seed
        else:
            if not 0 <= int(seed) < 2**64:
                raise ValueError("seed must be a 64-bit unsigned integer")
            self._seq = np.random.SeedSequence(int(seed))
        self.generator = np.random.Generator(np.random.PCG64(self._seq))

    @property
    def seed(self):
        """Entropy and spawn key identifying this stream."""
        return (self._seq.entropy, tuple(self._seq.spawn_key))

    def child(self, index: int) -> "SeededRng":
        """Deterministic child stream number ``index`` (independent of call order)."""
        seq = np.random.SeedSequence(self._seq.entropy,
                                     spawn_key=(*self._seq.spawn_key, int(index)))
        return SeededRng(seq)

    def split(self, n: int) -> list["SeededRng"]:
        return [self.child(i) for i in range(n)]

    def __repr__(self) -> str:
        return f"SeededRng(entropy={self._seq.entropy}, spawn_key={self._seq.spawn_key})"
