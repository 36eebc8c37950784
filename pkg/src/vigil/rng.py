"""Seedable deterministic RNG used anywhere reproducibility matters.

SplitMix64 (Steele et al.): state advances by the golden-gamma constant
0x9E3779B97F4A7C15; output is the finalizer with multipliers
0xBF58476D1CE4E5B9 and 0x94D049BB133111EB. Bounded draws use the
multiply-shift reduction (floor(u64 * bound / 2^64)). These constants are
part of the artifact contract: the same seed must produce the same crops,
cluster seeds, and corpus scenes on any platform.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return (z ^ (z >> 31)) & _MASK64

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        return (self.next_u64() * bound) >> 64

    def next_float(self) -> float:
        """Uniform float in [0, 1) with 53 bits of entropy."""
        return (self.next_u64() >> 11) / float(1 << 53)

    def choice(self, seq):
        return seq[self.below(len(seq))]

    def split(self) -> "SplitMix64":
        """Independent child stream (seeded from the next output)."""
        return SplitMix64(self.next_u64())
