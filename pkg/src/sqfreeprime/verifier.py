"""Windowed verification that n - p**2 is square-free for some small prime p.

For each window ``[N, N+W)`` one square-free sieve over
``[max(1, N - P**2), N + W - 4)`` answers every lookup ``n - p**2`` for
p <= P.  The n that exhaust the ladder are written out as failures and later
rechecked one at a time with the exact test and a larger prime cap.

Production parameters were W = 2**31 and P = 43; the desk defaults keep
P = 43 and shrink W to 2**24.
"""

from __future__ import annotations

import enum
import logging
import math
import os
import re
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Optional

import numpy as np

from .prime_tools import PrimeTable, is_prime_u64, is_squarefree_exact, primes_up_to
from .sieve import DEFAULT_SEGMENT_WIDTH, SieveSegment, sieve_squarefree

log = logging.getLogger(__name__)

DEFAULT_PRIME_CAP = 43
DEFAULT_RECHECK_CAP = 1000


class CheckpointError(RuntimeError):
    """A checkpoint or failure file does not match the run it claims to resume."""


class Status(enum.Enum):
    UNRESOLVED = "unresolved"
    RESOLVED = "resolved"
    REFUTED = "refuted"


@dataclass
class FailureRecord:
    n: int
    resolved_by: Optional[int] = None
    status: Status = Status.UNRESOLVED

    def to_line(self) -> str:
        if self.status is Status.RESOLVED:
            return f"RESOLVED {self.n} {self.resolved_by}"
        if self.status is Status.REFUTED:
            return f"REFUTED {self.n}"
        return f"FAIL {self.n}"


@dataclass(frozen=True)
class VerifierConfig:
    start: int
    end: int
    window_width: int = DEFAULT_SEGMENT_WIDTH
    prime_cap: int = DEFAULT_PRIME_CAP
    recheck_cap: int = DEFAULT_RECHECK_CAP
    worker_count: int = 1
    checkpoint_path: Optional[str] = None
    failure_path: Optional[str] = None

    def __post_init__(self):
        if self.start < 10:
            raise ValueError(f"start must be >= 10, got {self.start}")
        if self.end < self.start:
            raise ValueError(f"end {self.end} < start {self.start}")
        if self.window_width < 16:
            raise ValueError(f"window width must be >= 16, got {self.window_width}")
        if self.prime_cap < 3 or not is_prime_u64(self.prime_cap):
            raise ValueError(f"prime cap must be a prime >= 3, got {self.prime_cap}")
        if self.recheck_cap < self.prime_cap:
            raise ValueError("recheck cap must be >= prime cap")
        if self.worker_count < 1:
            raise ValueError("worker count must be >= 1")

    def windows(self) -> Iterator[tuple[int, int]]:
        """(window_start, width) pairs tiling [start, end] in ascending order."""
        for n0 in range(self.start, self.end + 1, self.window_width):
            yield n0, min(self.window_width, self.end + 1 - n0)


@dataclass
class WindowResult:
    window_start: int
    window_width: int
    checked_count: int
    failures: list[FailureRecord] = field(default_factory=list)


@dataclass
class VerificationReport:
    checked_count: int
    windows: int
    resumed_windows: int
    failures: list[FailureRecord]

    @property
    def unresolved(self) -> list[FailureRecord]:
        return [r for r in self.failures if r.status is not Status.RESOLVED]


def count_eligible(lo: int, hi: int) -> int:
    """Number of n in [lo, hi) with n % 4 != 1."""

    def below(x):  # n in [0, x) with n % 4 == 1
        return (x + 2) // 4

    return (hi - lo) - (below(hi) - below(lo))


@lru_cache(maxsize=None)
def ladder(cap: int) -> tuple[int, ...]:
    return tuple(primes_up_to(cap))


def _check_n(n: int) -> None:
    if n < 10:
        raise ValueError(f"n must be >= 10, got {n}")
    if n % 4 == 1:
        raise ValueError(f"n = {n} is 1 mod 4, outside the theorem's scope")


def smallest_representing_prime(
    n: int, cap: int, exact: bool = True, segment: Optional[SieveSegment] = None
) -> Optional[int]:
    """Least prime p <= cap with p**2 < n and n - p**2 square-free, or None.

    p = 2 is skipped when 4 | n, since then 4 | n - 4.  Without ``exact`` the
    square-free answers come from ``segment``, which must contain every
    n - p**2 consulted.
    """
    _check_n(n)
    if cap < 2:
        raise ValueError(f"cap must be >= 2, got {cap}")
    if not exact and segment is None:
        raise ValueError("a sieve segment is required when exact=False")
    test = is_squarefree_exact if exact else segment.is_squarefree
    for p in ladder(cap):
        if p * p >= n:
            break
        if p == 2 and n % 4 == 0:
            continue
        if test(n - p * p):
            return p
    return None


def window_ladder(n0: int, width: int, cap: int, primes: PrimeTable) -> np.ndarray:
    """Smallest representing prime for each n in [n0, n0 + width).

    Entry i belongs to n0 + i; 0 means no prime <= cap works, and entries for
    n = 1 mod 4 are always 0.
    """
    lo = max(1, n0 - cap * cap)
    seg = sieve_squarefree(lo, n0 + width - 4, primes)
    flags = seg.flags
    residue = (np.arange(width, dtype=np.int64) + n0) & 3
    found = np.zeros(width, dtype=np.int32)
    todo = residue != 1
    primes_ = ladder(cap)
    # the first two rungs settle most n: whole-window slices beat gathers there
    for p in primes_[:2]:
        q = p * p
        first = max(0, q + 1 - n0)  # n - q >= 1
        ok = flags[first + n0 - q - lo : width + n0 - q - lo] & todo[first:]
        if p == 2:
            ok &= residue[first:] != 0
        found[first:][ok] = p
        todo[first:] &= ~ok
    idx = np.flatnonzero(todo)
    for p in primes_[2:]:
        if not idx.size:
            break
        q = p * p
        pos = idx + (n0 - q - lo)
        ok = np.zeros(idx.size, dtype=bool)
        live = pos >= 0  # n - q >= lo; false only where q >= n at the range start
        ok[live] = flags[pos[live]]
        found[idx[ok]] = p
        idx = idx[~ok]
    return found


def verify_window(n0: int, cfg: VerifierConfig, primes: PrimeTable) -> WindowResult:
    """Check every eligible n in [n0, n0 + W) intersected with [start, end]."""
    if n0 < 10:
        raise ValueError(f"window start must be >= 10, got {n0}")
    lo_n = max(n0, cfg.start)
    hi_n = min(n0 + cfg.window_width, cfg.end + 1)
    if hi_n <= lo_n:
        return WindowResult(n0, 0, 0)
    found = window_ladder(lo_n, hi_n - lo_n, cfg.prime_cap, primes)
    eligible = ((np.arange(hi_n - lo_n, dtype=np.int64) + lo_n) & 3) != 1
    bad = np.flatnonzero(eligible & (found == 0)) + lo_n
    return WindowResult(
        window_start=n0,
        window_width=hi_n - n0,
        checked_count=count_eligible(lo_n, hi_n),
        failures=[FailureRecord(n) for n in bad.tolist()],
    )


# -- failure and checkpoint files -------------------------------------------

_FAIL_RE = re.compile(r"^(?:FAIL (\d+)|RESOLVED (\d+) (\d+)|REFUTED (\d+))$")
_SEG_RE = re.compile(r"^SEG (\d+) (\d+) DONE (\d+)$")


def format_failures(records: list[FailureRecord]) -> str:
    return "".join(r.to_line() + "\n" for r in records)


def parse_failure_line(line: str) -> FailureRecord:
    m = _FAIL_RE.match(line)
    if not m:
        raise ValueError(f"malformed failure line: {line!r}")
    fail, res_n, res_p, refuted = m.groups()
    if fail:
        return FailureRecord(int(fail))
    if res_n:
        return FailureRecord(int(res_n), int(res_p), Status.RESOLVED)
    return FailureRecord(int(refuted), None, Status.REFUTED)


def read_failures(path: str) -> list[FailureRecord]:
    with open(path, "r", encoding="ascii") as fh:
        text = fh.read()
    if text and not text.endswith("\n"):
        raise CheckpointError(f"{path}: last line is not newline-terminated")
    records = []
    for lineno, line in enumerate(text.splitlines(), 1):
        try:
            records.append(parse_failure_line(line))
        except ValueError as exc:
            raise CheckpointError(f"{path}:{lineno}: {exc}") from None
    return records


def write_failures(path: str, records: list[FailureRecord]) -> None:
    """Replace ``path`` atomically with ``records`` sorted by n."""
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="ascii", newline="\n") as fh:
        fh.write(format_failures(sorted(records, key=lambda r: r.n)))
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def _append(path: str, text: str) -> None:
    if not text:
        return
    # one write per window: O_APPEND keeps it from interleaving or tearing
    fd = os.open(path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
    try:
        os.write(fd, text.encode("ascii"))
        os.fsync(fd)
    finally:
        os.close(fd)


def read_checkpoint(path: str, cfg: VerifierConfig) -> list[tuple[int, int, int]]:
    """Completed (window_start, width, failure_count) entries, validated against cfg."""
    if not os.path.exists(path):
        return []
    with open(path, "r", encoding="ascii") as fh:
        text = fh.read()
    if text and not text.endswith("\n"):
        raise CheckpointError(f"{path}: last line is not newline-terminated: {text.splitlines()[-1]!r}")
    expected = cfg.windows()
    done = []
    for lineno, line in enumerate(text.splitlines(), 1):
        m = _SEG_RE.match(line)
        if not m:
            raise CheckpointError(f"{path}:{lineno}: corrupt checkpoint line {line!r}")
        entry = tuple(int(g) for g in m.groups())
        want = next(expected, None)
        if want is None or entry[:2] != want:
            raise CheckpointError(
                f"{path}:{lineno}: window {entry[:2]} does not match expected {want} "
                f"for start={cfg.start} end={cfg.end} width={cfg.window_width}"
            )
        done.append(entry)
    return done


# -- orchestration ------------------------------------------------------------

_worker_state: dict = {}


def _init_worker(cfg: VerifierConfig, primes: PrimeTable) -> None:
    _worker_state["cfg"] = cfg
    _worker_state["primes"] = primes


def _run_window(n0: int) -> WindowResult:
    return verify_window(n0, _worker_state["cfg"], _worker_state["primes"])


def _ordered_results(cfg: VerifierConfig, primes: PrimeTable, starts: list[int]) -> Iterator[WindowResult]:
    if cfg.worker_count == 1:
        for n0 in starts:
            yield verify_window(n0, cfg, primes)
        return
    with ProcessPoolExecutor(
        max_workers=cfg.worker_count, initializer=_init_worker, initargs=(cfg, primes)
    ) as pool:
        # bounded look-ahead; results are consumed strictly in window order
        depth = 2 * cfg.worker_count
        pending = [pool.submit(_run_window, n0) for n0 in starts[:depth]]
        nxt = len(pending)
        while pending:
            result = pending.pop(0).result()
            if nxt < len(starts):
                pending.append(pool.submit(_run_window, starts[nxt]))
                nxt += 1
            yield result


def sieve_primes_for(cfg: VerifierConfig) -> PrimeTable:
    return primes_up_to(math.isqrt(cfg.end))


def run_range(cfg: VerifierConfig) -> VerificationReport:
    """Verify [start, end] window by window, resuming from the checkpoint if present."""
    windows = list(cfg.windows())
    done = read_checkpoint(cfg.checkpoint_path, cfg) if cfg.checkpoint_path else []
    failures: list[FailureRecord] = []
    if done:
        resume_at = done[-1][0] + done[-1][1]
        old = read_failures(cfg.failure_path) if cfg.failure_path and os.path.exists(cfg.failure_path) else []
        failures = [r for r in old if r.n < resume_at]
        expected = sum(d[2] for d in done)
        if len(failures) != expected:
            raise CheckpointError(
                f"checkpoint records {expected} failures below {resume_at} "
                f"but {cfg.failure_path} holds {len(failures)}"
            )
        log.info("resuming after %d completed windows at n = %d", len(done), resume_at)
    if cfg.failure_path:
        write_failures(cfg.failure_path, failures)

    checked = sum(count_eligible(max(n0, cfg.start), n0 + w) for n0, w in windows[: len(done)])
    primes = sieve_primes_for(cfg)
    todo = [n0 for n0, _ in windows[len(done):]]
    for i, res in enumerate(_ordered_results(cfg, primes, todo), len(done) + 1):
        checked += res.checked_count
        failures.extend(res.failures)
        if cfg.failure_path:
            _append(cfg.failure_path, format_failures(res.failures))
        if cfg.checkpoint_path:
            _append(
                cfg.checkpoint_path,
                f"SEG {res.window_start} {res.window_width} DONE {len(res.failures)}\n",
            )
        log.info(
            "window %d/%d [%d, %d) done, %d failures",
            i, len(windows), res.window_start, res.window_start + res.window_width, len(res.failures),
        )
    return VerificationReport(
        checked_count=checked,
        windows=len(windows),
        resumed_windows=len(done),
        failures=failures,
    )


def recheck_failures(
    records: list[FailureRecord], recheck_cap: int
) -> tuple[list[FailureRecord], dict[int, int]]:
    """Retry unresolved records with the exact test and primes up to ``recheck_cap``.

    Returns the annotated records (sorted by n) and a prime -> count histogram
    over every resolved record.  Records already resolved pass through, so
    rechecking twice gives the same answer.
    """
    out = []
    for rec in sorted(records, key=lambda r: r.n):
        if rec.status is Status.UNRESOLVED:
            p = smallest_representing_prime(rec.n, recheck_cap, exact=True)
            if p is not None:
                rec = FailureRecord(rec.n, p, Status.RESOLVED)
        out.append(rec)
    hist = Counter(r.resolved_by for r in out if r.status is Status.RESOLVED)
    return out, dict(sorted(hist.items()))


def escalate(records: list[FailureRecord]) -> list[FailureRecord]:
    """Try every prime p with p**2 < n for the still-unresolved records.

    A record surviving this is a genuine counterexample and is marked refuted.
    """
    out = []
    for rec in records:
        if rec.status is Status.UNRESOLVED:
            p = smallest_representing_prime(rec.n, math.isqrt(rec.n - 1), exact=True)
            if p is None:
                log.error("n = %d has no representation at all", rec.n)
                rec = FailureRecord(rec.n, None, Status.REFUTED)
            else:
                rec = FailureRecord(rec.n, p, Status.RESOLVED)
        out.append(rec)
    return out
