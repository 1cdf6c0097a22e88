"""Bit strings, the LeadingOnes fitness and the three mutation families.

These are the reference (pure numpy) versions used by the mechanism state
machines and the tests. The compiled engine reimplements the same moves on
raw arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfiguration


@dataclass(frozen=True)
class BitString:
    """Fixed-length 0/1 vector. ``bits`` is a read-only uint8 array."""

    bits: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.bits, dtype=np.uint8, copy=True).reshape(-1)
        if arr.size == 0:
            raise InvalidConfiguration("bit string must have positive length")
        if np.any(arr > 1):
            raise InvalidConfiguration("bit string entries must be 0 or 1")
        arr.flags.writeable = False
        object.__setattr__(self, "bits", arr)

    @property
    def n(self) -> int:
        return int(self.bits.size)

    @classmethod
    def from_str(cls, text: str) -> BitString:
        return cls(np.array([int(c) for c in text], dtype=np.uint8))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> BitString:
        if n < 1:
            raise InvalidConfiguration(f"n must be positive, got {n}")
        return cls(rng.integers(0, 2, size=n, dtype=np.uint8))

    @classmethod
    def ones(cls, n: int) -> BitString:
        return cls(np.ones(n, dtype=np.uint8))

    def __str__(self) -> str:
        return "".join(map(str, self.bits.tolist()))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitString):
            return NotImplemented
        return bool(np.array_equal(self.bits, other.bits))

    def __hash__(self) -> int:
        return hash(self.bits.tobytes())

    def hamming(self, other: BitString) -> int:
        return int(np.count_nonzero(self.bits != other.bits))

    def toggled(self, positions: np.ndarray) -> BitString:
        """Copy with each listed position toggled once per occurrence."""
        counts = np.bincount(np.asarray(positions, dtype=np.int64), minlength=self.n)
        return BitString(self.bits ^ (counts & 1).astype(np.uint8))


def leading_ones(x: BitString) -> int:
    """Length of the maximal all-ones prefix."""
    zeros = np.flatnonzero(x.bits == 0)
    return int(zeros[0]) if zeros.size else x.n


def mbitflip_positions(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    if m < 1:
        raise InvalidConfiguration(f"flip count m must be at least 1, got {m}")
    return rng.integers(0, n, size=m)


def rls_positions(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    if m < 1 or m > n:
        raise InvalidConfiguration(f"need 1 <= m <= n for flips without replacement, got m={m}, n={n}")
    return rng.choice(n, size=m, replace=False)


def sbm_positions(n: int, rate: float, rng: np.random.Generator) -> np.ndarray:
    if not 0.0 < rate < 1.0:
        raise InvalidConfiguration(f"mutation rate must lie in (0, 1), got {rate}")
    return np.flatnonzero(rng.random(n) < rate)


def mbitflip(x: BitString, m: int, rng: np.random.Generator) -> BitString:
    """Draw m positions with replacement and toggle once per draw.

    A position drawn twice is toggled twice and so ends up unchanged.
    """
    return x.toggled(mbitflip_positions(x.n, m, rng))


def rls_flip(x: BitString, m: int, rng: np.random.Generator) -> BitString:
    """Toggle exactly m distinct positions chosen uniformly."""
    return x.toggled(rls_positions(x.n, m, rng))


def standard_bit_mutation(x: BitString, rate: float, rng: np.random.Generator) -> BitString:
    """Toggle every position independently with probability ``rate``."""
    return x.toggled(sbm_positions(x.n, rate, rng))
