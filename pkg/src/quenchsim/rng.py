"""Counter-addressed random streams.

Every stochastic routine in the toolkit draws from a ``RandomStream``. A
stream is identified by a 64-bit seed plus a tuple of non-negative integer
substream ids (job, instance, round, ...). Identical (seed, ids) always
reproduce identical draws, and disjoint id tuples give statistically
independent generators, so any single record of a large ensemble can be
regenerated in isolation.
"""

from __future__ import annotations

import numpy as np


class RandomStream:
    """A reproducible random source addressed by (seed, substream ids)."""

    def __init__(self, seed: int, ids: tuple[int, ...] = ()):
        self.seed = int(seed)
        self.ids = tuple(int(i) for i in ids)
        self._gen: np.random.Generator | None = None

    def substream(self, *ids: int) -> "RandomStream":
        """Child stream; draws are independent of the parent's."""
        return RandomStream(self.seed, self.ids + tuple(ids))

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            self._gen = np.random.Generator(
                np.random.PCG64(np.random.SeedSequence((self.seed,) + self.ids))
            )
        return self._gen

    def bits(self, count: int) -> np.ndarray:
        """`count` i.i.d. uniform bits as an int8 array."""
        return self.generator.integers(0, 2, size=count, dtype=np.int8)

    def __repr__(self) -> str:
        return f"RandomStream(seed={self.seed}, ids={self.ids})"
