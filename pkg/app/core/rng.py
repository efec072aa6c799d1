"""Deterministic, platform-independent random streams.

Raw 64-bit words come from the PCG64 bit generator, whose output stream numpy
guarantees to be stable for a given seed. Uniforms and gaussians are derived
from those raw words here (53-bit mantissa fill, Box-Muller), so the values do
not depend on numpy's higher-level distribution code.
"""

from typing import Tuple, Union

import numpy as np

MASK64 = (1 << 64) - 1
_TWO_POW_MINUS_53 = 2.0 ** -53


def splitmix64(x: int) -> int:
    """One step of the splitmix64 finaliser; used to derive child seeds."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


class SeededRng:
    """Single-owner random stream; each worker must own its instance."""

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError(f"seed must be non-negative, got {seed}")
        self.seed = int(seed) & MASK64
        self._bitgen = np.random.PCG64(self.seed)

    def derive(self, tag: int) -> "SeededRng":
        """Independent child stream keyed by (seed, tag); does not advance self."""
        return SeededRng(splitmix64(self.seed ^ splitmix64(tag)))

    def uniforms(self, n: int) -> np.ndarray:
        raw = self._bitgen.random_raw(n)
        return (np.asarray(raw, dtype=np.uint64) >> np.uint64(11)).astype(np.float64) * _TWO_POW_MINUS_53

    def next_uniform(self) -> float:
        return float(self.uniforms(1)[0])

    def gaussians(self, n: int) -> np.ndarray:
        pairs = (n + 1) // 2
        u = self.uniforms(2 * pairs)
        radius = np.sqrt(-2.0 * np.log1p(-u[0::2]))
        angle = 2.0 * np.pi * u[1::2]
        out = np.empty(2 * pairs, dtype=np.float64)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:n]

    def next_gaussian(self) -> float:
        return float(self.gaussians(1)[0])

    def normal(self, std: float, shape: Union[int, Tuple[int, ...]]) -> np.ndarray:
        shape = (shape,) if isinstance(shape, int) else tuple(shape)
        size = int(np.prod(shape)) if shape else 1
        return (self.gaussians(size) * std).reshape(shape)

    def integers(self, low: int, high: int, size: int) -> np.ndarray:
        """Integers drawn uniformly from [low, high)."""
        if high <= low:
            raise ValueError(f"empty integer range [{low}, {high})")
        span = high - low
        drawn = np.floor(self.uniforms(size) * span).astype(np.int64)
        return low + np.minimum(drawn, span - 1)

    def permutation(self, n: int) -> np.ndarray:
        return np.argsort(self.uniforms(n), kind="stable")
