"""Portable seeded generator for round sampling.

SplitMix64: 64-bit state advanced by a fixed odd increment, output passed
through the standard two-multiply finalizer.  Uniforms use the top 53 bits.
Run ``i`` of a batch seeded with ``s`` uses a generator whose seed is the
``i``-th output of ``SplitMix64(s)``, so runs can be generated in any order.
"""

from __future__ import annotations

from typing import Sequence, TypeVar

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15

T = TypeVar("T")


def mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed: int) -> None:
        if not 0 <= seed <= MASK64:
            raise ValueError(f"seed {seed} is not an unsigned 64-bit integer")
        self.state = seed

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        return mix64(self.state)

    def uniform(self) -> float:
        """Uniform float in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))


def run_seed(seed: int, index: int) -> int:
    """Seed for run ``index``: the ``index``-th output of ``SplitMix64(seed)``."""
    return mix64((seed + (index + 1) * GAMMA) & MASK64)


def categorical(rng: SplitMix64, outcomes: Sequence[T], cumulative: Sequence[float]) -> T:
    """Draw from ``outcomes`` given float cumulative probabilities (last one ~1)."""
    u = rng.uniform()
    for outcome, c in zip(outcomes, cumulative):
        if u < c:
            return outcome
    return outcomes[-1]
