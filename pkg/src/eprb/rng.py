"""Counter-based random streams.

Each stream is a numpy Philox generator keyed by a 64-bit seed. Substreams are
carved out of the counter space by fixing the top counter word, so substream
``i`` never overlaps substream ``j`` for any realistic draw count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RandomStream:
    seed: int
    counter: int = 0

    def __post_init__(self):
        if not 0 <= self.seed <= _MASK64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if not 0 <= self.counter < (1 << 128):
            raise ValueError("counter must fit in 128 bits")

    def generator(self) -> np.random.Generator:
        words = [self.counter & _MASK64, self.counter >> 64, 0, 0]
        return np.random.Generator(np.random.Philox(key=self.seed, counter=words))

    def substream(self, index: int) -> np.random.Generator:
        """Independent generator for block ``index`` (top counter word)."""
        if index < 0:
            raise ValueError("substream index must be nonnegative")
        words = [self.counter & _MASK64, self.counter >> 64, 0, index & _MASK64]
        return np.random.Generator(np.random.Philox(key=self.seed, counter=words))


def as_generator(rng) -> np.random.Generator:
    """Accept a RandomStream, a Generator or an int seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RandomStream):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RandomStream(int(rng)).generator()
    raise TypeError(f"cannot build a generator from {type(rng).__name__}")
