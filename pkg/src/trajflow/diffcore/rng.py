"""Seeded random streams.

Each purpose ("data", "noise", "init", ...) gets its own counter-based
Philox stream derived from the root seed, so adding draws to one purpose
never shifts the numbers another purpose sees.
"""

import zlib

import numpy as np


def _purpose_key(purpose):
    return zlib.crc32(purpose.encode("utf-8"))


class SeededRng:
    """Root seed plus lazily created per-purpose streams."""

    def __init__(self, seed):
        seed = int(seed)
        if seed < 0 or seed >= 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
        self.seed = seed
        self._streams = {}

    def stream(self, purpose):
        """Return the generator for ``purpose``, creating it on first use."""
        gen = self._streams.get(purpose)
        if gen is None:
            ss = np.random.SeedSequence(self.seed, spawn_key=(_purpose_key(purpose),))
            gen = np.random.Generator(np.random.Philox(ss))
            self._streams[purpose] = gen
        return gen

    def child(self, purpose, index):
        """Independent generator for item ``index`` of ``purpose``.

        Used by per-item generators (one trajectory each) so results do not
        depend on iteration order.
        """
        ss = np.random.SeedSequence(self.seed, spawn_key=(_purpose_key(purpose), int(index)))
        return np.random.Generator(np.random.Philox(ss))

    def __repr__(self):
        return f"SeededRng(seed={self.seed})"
