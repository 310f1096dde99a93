"""Deterministic random numbers for reproducible augmentation.

Gaussian draws are pinned to one named construction -- Box-Muller over a
SplitMix64 stream -- so identical seeds give identical noise regardless of
platform or numpy version. Seeds can be derived stably from strings, which
keeps per-item streams independent of iteration order.
"""

from __future__ import annotations

import hashlib
import math

_MASK64 = (1 << 64) - 1


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from arbitrary parts (ints, strings)."""
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(str(p).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


class SplitMix64:
    """Small splittable 64-bit generator (Steele, Lea & Flood 2014)."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def next_double(self) -> float:
        # 53-bit mantissa mapped into (0, 1]; never 0 so log() is safe.
        return ((self.next_u64() >> 11) + 1) * 2.0**-53


class BoxMullerGaussian:
    """Standard-normal stream: Box-Muller transform over SplitMix64."""

    def __init__(self, seed: int):
        self._rng = SplitMix64(seed)
        self._spare: float | None = None

    def next(self) -> float:
        if self._spare is not None:
            z = self._spare
            self._spare = None
            return z
        u1 = self._rng.next_double()
        u2 = self._rng.next_double()
        r = math.sqrt(-2.0 * math.log(u1))
        self._spare = r * math.sin(2.0 * math.pi * u2)
        return r * math.cos(2.0 * math.pi * u2)

    def fill(self, n: int) -> list[float]:
        return [self.next() for _ in range(n)]
