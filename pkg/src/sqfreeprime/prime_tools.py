"""Prime generation, 64-bit primality and exact square-free testing.

Everything here is a pure function of its arguments.  The only state is a
lazily built, read-only table of the primes below the cube root of 2**64,
which the exact square-free test trial-divides by.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

U64_MAX = (1 << 64) - 1

# Deterministic Miller-Rabin: the first twelve primes as bases give a correct
# answer for every n < 3.317e24 (Sorenson & Webster, 2015), hence for all of
# the 64-bit range.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)

# ceil(cbrt(2**64 - 1)); enough trial primes for any 64-bit square-free test.
_CBRT_U64 = 2642246


@dataclass(frozen=True, eq=False)
class PrimeTable:
    """All primes <= ``limit``, strictly increasing, as a read-only int64 array."""

    limit: int
    primes: np.ndarray

    def __len__(self) -> int:
        return len(self.primes)

    def __iter__(self):
        return iter(self.primes.tolist())

    def __contains__(self, p: int) -> bool:
        i = np.searchsorted(self.primes, p)
        return bool(i < len(self.primes) and self.primes[i] == p)

    def up_to(self, bound: int) -> np.ndarray:
        """View of the primes <= bound (bound may exceed ``limit``)."""
        return self.primes[: np.searchsorted(self.primes, bound, side="right")]


def _odd_sieve(limit: int) -> np.ndarray:
    # is_odd_prime[i] <=> 2*i + 1 is prime
    flags = np.ones((limit - 1) // 2 + 1, dtype=bool)
    flags[0] = False
    for i in range(1, (math.isqrt(limit) - 1) // 2 + 1):
        if flags[i]:
            p = 2 * i + 1
            flags[p * p // 2 :: p] = False
    return flags


def primes_up_to(limit: int) -> PrimeTable:
    """Return the table of primes ``p <= limit``.

    >>> list(primes_up_to(10))
    [2, 3, 5, 7]
    """
    if limit < 0:
        raise ValueError(f"limit must be non-negative, got {limit}")
    if limit < 2:
        primes = np.zeros(0, dtype=np.int64)
    else:
        odd = 2 * np.flatnonzero(_odd_sieve(limit)).astype(np.int64) + 1
        primes = np.concatenate(([2], odd)).astype(np.int64)
    primes.flags.writeable = False
    return PrimeTable(limit=limit, primes=primes)


@lru_cache(maxsize=1)
def _trial_primes() -> tuple[np.ndarray, list[int]]:
    table = primes_up_to(_CBRT_U64).primes
    ps = table.astype(np.uint64)
    ps.flags.writeable = False
    return ps, table.tolist()


def _check_u64(m: int) -> None:
    if m < 0 or m > U64_MAX:
        raise ValueError(f"{m} is outside the unsigned 64-bit range")


def is_prime_u64(m: int) -> bool:
    """Deterministic primality test, exact for every 0 <= m < 2**64."""
    _check_u64(m)
    if m < 2:
        return False
    for p in _MR_BASES:
        if m % p == 0:
            return m == p
    d, s = m - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, m)
        if x == 1 or x == m - 1:
            continue
        for _ in range(s - 1):
            x = x * x % m
            if x == m - 1:
                break
        else:
            return False
    return True


def is_perfect_square(m: int) -> bool:
    if m < 0:
        return False
    r = math.isqrt(m)
    return r * r == m


def icbrt(m: int) -> int:
    """Floor of the cube root of a non-negative integer."""
    if m < 0:
        raise ValueError("icbrt of a negative number")
    if m < 2:
        return m
    r = int(round(m ** (1.0 / 3.0)))
    while r * r * r > m:
        r -= 1
    while (r + 1) ** 3 <= m:
        r += 1
    return r


def icbrt_ceil(m: int) -> int:
    r = icbrt(m)
    return r if r * r * r == m else r + 1


def classify_cofactor(r: int) -> str:
    """Name the shape of a cofactor whose prime factors all exceed cbrt(m).

    Such an ``r`` has at most two prime factors, so it is one of
    ``"unit"``, ``"prime"``, ``"prime_square"`` or ``"semiprime"``.
    """
    if r == 1:
        return "unit"
    if is_perfect_square(r):
        return "prime_square"
    if is_prime_u64(r):
        return "prime"
    return "semiprime"


def is_squarefree_exact(m: int) -> bool:
    """True iff no prime square divides ``m``; 1 is square-free.

    Trial-divides by primes up to ceil(m**(1/3)).  What survives has at most
    two prime factors, all large, and is square-free unless it is a prime
    square.
    """
    if m == 0:
        raise ValueError("0 is divisible by every square")
    _check_u64(m)
    ps, plist = _trial_primes()
    k = bisect.bisect_right(plist, icbrt_ceil(m))
    if k <= 64:
        divisors = [p for p in plist[:k] if m % p == 0]
    else:
        divisors = ps[:k][np.uint64(m) % ps[:k] == 0].tolist()
    r = m
    for p in divisors:
        r //= p
        if r % p == 0:
            return False
    # r is 1, a prime, a product of two distinct primes, or a prime square
    if r > 1 and is_perfect_square(r):
        assert is_prime_u64(math.isqrt(r)), f"cofactor {r} of {m} is not a prime square"
        return False
    return True


def omega_distinct(m: int) -> int:
    """Number of distinct prime divisors of ``m`` (by trial division)."""
    if m < 1:
        raise ValueError(f"omega is defined for m >= 1, got {m}")
    count = 0
    if m % 2 == 0:
        count += 1
        while m % 2 == 0:
            m //= 2
    p = 3
    while p * p <= m:
        if m % p == 0:
            count += 1
            while m % p == 0:
                m //= p
        p += 2
    return count + (m > 1)


def omega_table(limit: int) -> np.ndarray:
    """omega(k) for 0 <= k <= limit, by sieving (entry 0 is meaningless)."""
    om = np.zeros(limit + 1, dtype=np.int8)
    for p in primes_up_to(limit).primes.tolist():
        om[p::p] += 1
    return om
