"""SplitMix64 random stream.

A small counter-based generator with fixed, published constants, so that a
seed reproduces the same corpus and the same network initialisation on any
platform. Draw ``i`` of a stream started at ``seed`` is
``mix(seed + (i + 1) * GAMMA)``, which lets whole blocks be produced with
vectorised uint64 arithmetic.
"""

from __future__ import annotations

import numpy as np

GAMMA = 0x9E3779B97F4A7C15
MUL1 = 0xBF58476D1CE4E5B9
MUL2 = 0x94D049BB133111EB
MASK64 = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MUL1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MUL2)
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Sequential SplitMix64 stream.

    Parameters
    ----------
    seed : int
        Any non-negative integer; reduced modulo 2**64.
    """

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        self._state = seed & MASK64

    def next_uint64(self, n: int) -> np.ndarray:
        """Return the next ``n`` raw 64-bit outputs."""
        if n < 0:
            raise ValueError("n must be non-negative")
        steps = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self._state) + steps * np.uint64(GAMMA)
            out = _mix(z)
        self._state = (self._state + n * GAMMA) & MASK64
        return out

    def uniform(self, n: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        """Doubles in ``[low, high)`` built from the top 53 bits."""
        u = (self.next_uint64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return low + (high - low) * u

    def scalar(self, low: float = 0.0, high: float = 1.0) -> float:
        return float(self.uniform(1, low, high)[0])

    def integer(self, low: int, high: int) -> int:
        """Integer in the closed range ``[low, high]``."""
        if high < low:
            raise ValueError("empty integer range")
        span = high - low + 1
        return low + int(self.next_uint64(1)[0] % np.uint64(span))

    def normal(self, n: int) -> np.ndarray:
        """Standard normal draws via Box-Muller (two uniforms per pair)."""
        m = (n + 1) // 2
        u1 = self.uniform(m)
        u2 = self.uniform(m)
        r = np.sqrt(-2.0 * np.log1p(-u1))
        theta = 2.0 * np.pi * u2
        return np.concatenate([r * np.cos(theta), r * np.sin(theta)])[:n]

    def permutation(self, n: int) -> np.ndarray:
        """Fisher-Yates shuffle of ``range(n)``."""
        perm = np.arange(n)
        if n < 2:
            return perm
        draws = self.next_uint64(n - 1)
        for k, i in enumerate(range(n - 1, 0, -1)):
            j = int(draws[k] % np.uint64(i + 1))
            perm[i], perm[j] = perm[j], perm[i]
        return perm
