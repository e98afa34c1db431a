"""Square-free flags for a contiguous interval, by crossing out prime squares."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .prime_tools import PrimeTable

# Default segment width at desk scale (production used 2**31 with 16 sieves).
DEFAULT_SEGMENT_WIDTH = 1 << 24

# Interval ends are kept below 2**62 so offsets and p**2 fit in int64.
MAX_SIEVE_HI = 1 << 62


class InsufficientPrimesError(ValueError):
    """The prime table does not reach sqrt(hi - 1): a caller bug."""


@dataclass(frozen=True, eq=False)
class SieveSegment:
    """Square-free flags for ``[lo, hi)``.

    With ``packed=False`` (the default) ``flags`` holds one bool per integer.
    With ``packed=True`` it holds eight integers per byte, little-endian bit
    order; lookups are then slower but memory drops by 8x.
    """

    lo: int
    hi: int
    flags: np.ndarray
    packed: bool = False

    def __len__(self) -> int:
        return self.hi - self.lo

    def __contains__(self, m: int) -> bool:
        return self.lo <= m < self.hi

    def is_squarefree(self, m: int) -> bool:
        if not self.lo <= m < self.hi:
            raise IndexError(f"{m} outside segment [{self.lo}, {self.hi})")
        i = m - self.lo
        if self.packed:
            return bool((self.flags[i >> 3] >> (i & 7)) & 1)
        return bool(self.flags[i])

    def bools(self) -> np.ndarray:
        """One bool per integer, whatever the storage layout."""
        if self.packed:
            return np.unpackbits(self.flags, count=len(self), bitorder="little").view(bool)
        return self.flags

    def nonsquarefree(self) -> list[int]:
        return (np.flatnonzero(~self.bools()) + self.lo).tolist()


def _mark(lo: int, size: int, primes: np.ndarray) -> np.ndarray:
    flags = np.ones(size, dtype=bool)
    p2 = primes * primes
    # offset of the least multiple of p**2 that is >= lo
    off = np.int64(-lo) % p2
    dense = p2 <= size
    for o, step in zip(off[dense].tolist(), p2[dense].tolist()):
        flags[o::step] = False
    # each sparse square has at most one multiple in the interval
    sparse = off[~dense]
    flags[sparse[sparse < size]] = False
    return flags


def sieve_squarefree(lo: int, hi: int, primes: PrimeTable, packed: bool = False) -> SieveSegment:
    """Sieve ``[lo, hi)``; ``primes`` must cover every p with p**2 < hi."""
    if lo < 1:
        raise ValueError(f"lo must be >= 1, got {lo}")
    if hi <= lo:
        raise ValueError(f"empty interval [{lo}, {hi})")
    if hi > MAX_SIEVE_HI:
        raise ValueError(f"hi={hi} exceeds the supported sieve range 2**62")
    root = math.isqrt(hi - 1)
    if primes.limit < root:
        raise InsufficientPrimesError(
            f"prime table reaches {primes.limit}, sieving [{lo}, {hi}) needs {root}"
        )
    flags = _mark(lo, hi - lo, primes.up_to(root))
    if packed:
        flags = np.packbits(flags, bitorder="little")
    flags.flags.writeable = False
    return SieveSegment(lo=lo, hi=hi, flags=flags, packed=packed)
