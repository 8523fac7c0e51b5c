"""Deterministic, splittable random streams.

A stream is keyed by (seed, shard) and backed by the counter-based Philox
generator, so reconstructing a stream with the same key replays the same
sequence and sibling shards are statistically independent. Each concurrent
worker must own its own shard; a stream itself is not thread-safe.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(x: int) -> int:
    # splitmix64 finalizer: bijective mixing on 64-bit words
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (x ^ (x >> 31)) & _MASK64


class RandomStream:
    """Stateful draw source for one (seed, shard) key."""

    def __init__(self, seed: int, shard: int = 0):
        self.seed = int(seed) & _MASK64
        self.shard = int(shard) & _MASK64
        self._generator = np.random.Generator(
            np.random.Philox(key=np.array([self.seed, self.shard], dtype=np.uint64))
        )

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def child(self, index: int) -> "RandomStream":
        """Independent sibling stream; deterministic in (seed, shard, index)."""
        return RandomStream(self.seed, _mix64(self.shard ^ ((index + 1) * _GOLDEN)))

    def __repr__(self):
        return f"RandomStream(seed={self.seed}, shard={self.shard})"
