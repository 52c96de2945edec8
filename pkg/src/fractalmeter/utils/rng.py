# src/fractalmeter/utils/rng.py

"""
Seeded random streams with a fixed algorithm (PCG64).

Structure decisions (survival of a child, choice of a leaf) use the raw
64-bit integer output only, so the same seed yields the same trees on
every platform.
"""

from typing import Final

import numpy as np


_TWO_64: Final[int] = 1 << 64


class StableRng:
    def __init__(self, seed: int) -> None:
        self.seed = int(seed)
        self._bits = np.random.PCG64(self.seed)

    def raw(self, n: int) -> np.ndarray:
        """n raw 64-bit words."""
        return np.asarray(self._bits.random_raw(n), dtype=np.uint64)

    def survive(self, p: float, n: int) -> np.ndarray:
        """n independent Bernoulli(p) draws; p = 1 always survives."""
        if p >= 1.0:
            self.raw(n)
            return np.ones(n, dtype=bool)
        cut = np.uint64(int(p * _TWO_64))
        return self.raw(n) < cut

    def uniform(self, n: int) -> np.ndarray:
        """n floats in [0, 1) from the top 53 bits of each word."""
        return (self.raw(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def choice(self, cumulative: np.ndarray, n: int) -> np.ndarray:
        """Indices drawn from the distribution with the given cumulative masses."""
        u = self.uniform(n) * float(cumulative[-1])
        return np.minimum(np.searchsorted(cumulative, u, side="right"), len(cumulative) - 1)
