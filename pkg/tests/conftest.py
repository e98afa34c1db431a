"""Independent oracles shared by the test modules.

None of these reuse package code paths: they trial-divide by every integer,
or sieve by every square d**2 rather than prime squares only.
"""

import math

import numpy as np
import pytest


def naive_is_prime(m):
    if m < 2:
        return False
    d = 2
    while d * d <= m:
        if m % d == 0:
            return False
        d += 1
    return True


def naive_squarefree(m):
    d = 2
    while d * d <= m:
        if m % (d * d) == 0:
            return False
        d += 1
    return True


def squarefree_by_all_squares(lo, hi):
    """Flags for [lo, hi): cross out multiples of d**2 for every d >= 2."""
    flags = np.ones(hi - lo, dtype=bool)
    for d in range(2, math.isqrt(hi - 1) + 1):
        s = d * d
        flags[(-lo) % s :: s] = False
    return flags


def eratosthenes_list(n):
    """Plain-list sieve, independent of the numpy implementation."""
    if n < 2:
        return []
    is_p = [True] * (n + 1)
    is_p[0] = is_p[1] = False
    for i in range(2, math.isqrt(n) + 1):
        if is_p[i]:
            for j in range(i * i, n + 1, i):
                is_p[j] = False
    return [i for i, v in enumerate(is_p) if v]


def exact_ladder(n, cap, sqfree=naive_squarefree):
    """Smallest prime p <= cap, p**2 < n, with n - p**2 square-free (or None)."""
    for p in eratosthenes_list(cap):
        if p * p >= n:
            break
        if p == 2 and n % 4 == 0:
            continue
        if sqfree(n - p * p):
            return p
    return None


@pytest.fixture(scope="session")
def primes_to_1e8():
    from sqfreeprime.prime_tools import primes_up_to

    return primes_up_to(10**8).primes


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance(request):
    """Call with (label, limit_seconds); yields a context that records PASS/FAIL."""
    import contextlib
    import time

    @contextlib.contextmanager
    def criterion(label, limit=None):
        t0 = time.perf_counter()
        ok = False
        try:
            yield
            elapsed = time.perf_counter() - t0
            assert limit is None or elapsed < limit, f"{label}: {elapsed:.1f}s over the {limit}s budget"
            ok = True
        finally:
            elapsed = time.perf_counter() - t0
            line = f"{'PASS' if ok else 'FAIL'} {label} ({elapsed:.2f}s)"
            ACCEPTANCE_LINES.append(line)
            print(line)

    return criterion


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
