import math
import os
import random
import signal
import subprocess
import sys
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sqfreeprime import verifier
from sqfreeprime.prime_tools import is_prime_u64, is_squarefree_exact, primes_up_to
from sqfreeprime.sieve import InsufficientPrimesError, sieve_squarefree
from sqfreeprime.verifier import (
    CheckpointError,
    FailureRecord,
    Status,
    VerifierConfig,
    count_eligible,
    escalate,
    parse_failure_line,
    read_checkpoint,
    read_failures,
    recheck_failures,
    run_range,
    smallest_representing_prime,
    verify_window,
    window_ladder,
)

from conftest import exact_ladder

HARD_N = 1623364493706484


# -- single n ----------------------------------------------------------------

def test_ten_uses_two():
    # 10 = 2**2 + 6 with 6 square-free; 10 = 3**2 + 1 is the next option
    assert smallest_representing_prime(10, 43) == 2
    assert is_squarefree_exact(10 - 9)


def test_twelve_skips_two():
    assert smallest_representing_prime(12, 43) == 3


def test_hardest_known_instance():
    assert smallest_representing_prime(HARD_N, 73) == 73
    assert smallest_representing_prime(HARD_N, 97) == 73
    assert smallest_representing_prime(HARD_N, 71) is None


@pytest.mark.parametrize("n", [9, 13, 17, 1, 0])
def test_out_of_scope(n):
    with pytest.raises(ValueError):
        smallest_representing_prime(n, 43)


def test_bad_cap():
    with pytest.raises(ValueError):
        smallest_representing_prime(12, 1)


def test_segment_mode_requires_segment():
    with pytest.raises(ValueError):
        smallest_representing_prime(12, 43, exact=False)


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=10, max_value=10**7))
def test_segment_mode_matches_exact(n):
    if n % 4 == 1:
        n += 1
    seg = sieve_squarefree(max(1, n - 43 * 43), n, primes_up_to(math.isqrt(n)))
    assert smallest_representing_prime(n, 43, exact=False, segment=seg) == smallest_representing_prime(n, 43)


@settings(max_examples=300, deadline=None)
@given(st.integers(min_value=10, max_value=10**6), st.sampled_from([3, 5, 13, 43]))
def test_exact_ladder_matches_naive(n, cap):
    if n % 4 == 1:
        return
    assert smallest_representing_prime(n, cap) == exact_ladder(n, cap)


# -- windows -----------------------------------------------------------------

@pytest.mark.parametrize("lo,hi", [(10, 11), (10, 14), (13, 30), (0, 4), (5, 1000), (1001, 1001)])
def test_count_eligible(lo, hi):
    assert count_eligible(lo, hi) == sum(1 for n in range(lo, hi) if n % 4 != 1)


def test_small_range_window_has_no_failures():
    cfg = VerifierConfig(start=10, end=2047, window_width=2038, prime_cap=43)
    res = verify_window(10, cfg, primes_up_to(50))
    assert res.failures == []
    assert res.checked_count == count_eligible(10, 2048)
    assert res.window_width == 2038


def test_window_with_tiny_cap():
    cfg = VerifierConfig(start=16, end=31, window_width=16, prime_cap=3)
    res = verify_window(16, cfg, primes_up_to(10))
    expected = [n for n in range(16, 32) if n % 4 != 1 and exact_ladder(n, 3) is None]
    assert [r.n for r in res.failures] == expected
    # 16 - 9 = 7, 18 - 4 = 14, ... all pass; 20: 20 - 9 = 11 ok; 24: 15 ok; 28: 19 ok
    assert res.checked_count == 12


def test_window_truncated_at_end():
    cfg = VerifierConfig(start=10, end=100, window_width=64)
    res = verify_window(74, cfg, primes_up_to(10))
    assert res.window_width == 27
    assert res.checked_count == count_eligible(74, 101)


def test_window_needs_enough_primes():
    cfg = VerifierConfig(start=10, end=10**6, window_width=1 << 12)
    with pytest.raises(InsufficientPrimesError):
        verify_window(10**6 - 4000, cfg, primes_up_to(100))


def test_window_ladder_matches_exact_on_dense_range():
    found = window_ladder(10, 5000, 43, primes_up_to(100))
    for i, p in enumerate(found.tolist()):
        n = 10 + i
        if n % 4 == 1:
            assert p == 0
        else:
            assert p == (exact_ladder(n, 43) or 0), n


def test_window_ladder_random_large_n():
    rng = random.Random(45)
    primes = primes_up_to(1 << 23)
    for _ in range(300):
        n = rng.randint(10, 1 << 45)
        if n % 4 == 1:
            n += 1
        p = int(window_ladder(n, 1, 43, primes)[0])
        assert p == (smallest_representing_prime(n, 43) or 0), n


def test_ladder_monotone_in_cap():
    primes = primes_up_to(2000)
    prev = None
    for cap in (3, 5, 7, 11, 13):
        fails = set(np.flatnonzero(window_ladder(10**6, 10**5, cap, primes) == 0).tolist())
        if prev is not None:
            assert fails <= prev
        prev = fails


# -- configuration -----------------------------------------------------------

@pytest.mark.parametrize(
    "kwargs",
    [
        dict(start=9, end=100),
        dict(start=100, end=99),
        dict(start=10, end=100, window_width=15),
        dict(start=10, end=100, prime_cap=4),
        dict(start=10, end=100, prime_cap=2),
        dict(start=10, end=100, prime_cap=43, recheck_cap=41),
        dict(start=10, end=100, worker_count=0),
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        VerifierConfig(**kwargs)


@settings(max_examples=50, deadline=None)
@given(
    st.integers(min_value=10, max_value=5000),
    st.integers(min_value=0, max_value=20000),
    st.integers(min_value=16, max_value=3000),
)
def test_windows_tile_range(start, span, width):
    cfg = VerifierConfig(start=start, end=start + span, window_width=width, prime_cap=3)
    wins = list(cfg.windows())
    assert wins[0][0] == start
    assert sum(w for _, w in wins) == span + 1
    assert all(a + w == b for (a, w), (b, _) in zip(wins, wins[1:]))
    report = run_range(cfg)
    assert report.checked_count == count_eligible(start, start + span + 1)


# -- runs --------------------------------------------------------------------

def test_run_to_1e6_has_no_failures():
    cfg = VerifierConfig(start=10, end=10**6, window_width=1 << 16, prime_cap=43)
    report = run_range(cfg)
    assert report.failures == []
    assert report.windows == math.ceil((10**6 - 9) / (1 << 16))
    assert report.checked_count == count_eligible(10, 10**6 + 1)
    rng = random.Random(1)
    for n in rng.sample(range(10, 10**6 + 1), 10**4):
        if n % 4 != 1:
            assert smallest_representing_prime(n, 43) is not None


def test_worker_pool_matches_single(tmp_path):
    kw = dict(start=10, end=600_000, window_width=1 << 15, prime_cap=5)
    one = VerifierConfig(**kw, failure_path=str(tmp_path / "one.txt"), checkpoint_path=str(tmp_path / "one.ckpt"))
    two = VerifierConfig(
        **kw, worker_count=2, failure_path=str(tmp_path / "two.txt"), checkpoint_path=str(tmp_path / "two.ckpt")
    )
    r1, r2 = run_range(one), run_range(two)
    assert r1.failures and [r.n for r in r1.failures] == [r.n for r in r2.failures]
    assert (tmp_path / "one.txt").read_bytes() == (tmp_path / "two.txt").read_bytes()
    assert (tmp_path / "one.ckpt").read_bytes() == (tmp_path / "two.ckpt").read_bytes()


def _cfg(tmp_path, tag, **kw):
    base = dict(start=10, end=400_000, window_width=1 << 14, prime_cap=5)
    base.update(kw)
    return VerifierConfig(
        **base, checkpoint_path=str(tmp_path / f"{tag}.ckpt"), failure_path=str(tmp_path / f"{tag}.txt")
    )


def test_checkpoint_format(tmp_path):
    cfg = _cfg(tmp_path, "a")
    report = run_range(cfg)
    lines = (tmp_path / "a.ckpt").read_text().splitlines()
    assert len(lines) == report.windows
    assert lines[0].startswith("SEG 10 16384 DONE ")
    total = sum(int(line.split()[4]) for line in lines)
    assert total == len(report.failures)
    fail_lines = (tmp_path / "a.txt").read_text().splitlines()
    assert fail_lines == [f"FAIL {r.n}" for r in report.failures]
    ns = [r.n for r in report.failures]
    assert ns == sorted(ns)


def test_resume_is_byte_identical(tmp_path):
    full = _cfg(tmp_path, "full")
    run_range(full)
    part = _cfg(tmp_path, "part")
    ckpt = (tmp_path / "full.ckpt").read_text().splitlines(keepends=True)
    fails = read_failures(full.failure_path)
    half = ckpt[: len(ckpt) // 2]
    resume_at = int(half[-1].split()[1]) + int(half[-1].split()[2])
    (tmp_path / "part.ckpt").write_text("".join(half))
    # also leave behind failures from the window that never checkpointed
    stale = [r for r in fails if r.n < resume_at + 20000]
    (tmp_path / "part.txt").write_text("".join(r.to_line() + "\n" for r in stale))
    report = run_range(part)
    assert report.resumed_windows == len(half)
    assert (tmp_path / "part.txt").read_bytes() == (tmp_path / "full.txt").read_bytes()
    assert (tmp_path / "part.ckpt").read_bytes() == (tmp_path / "full.ckpt").read_bytes()
    assert report.checked_count == count_eligible(10, 400_001)


def test_resume_of_finished_run_does_nothing(tmp_path):
    cfg = _cfg(tmp_path, "done")
    first = run_range(cfg)
    before = (tmp_path / "done.txt").read_bytes()
    again = run_range(cfg)
    assert again.resumed_windows == again.windows
    assert (tmp_path / "done.txt").read_bytes() == before
    assert [r.n for r in again.failures] == [r.n for r in first.failures]


@pytest.mark.parametrize(
    "bad",
    [
        "SEG 10 16384 DONE x\n",
        "SEG 10 16384 DONE 3",  # no newline
        "SEG 16394 16384 DONE 0\n",  # skips the first window
        "SEG 10 8192 DONE 0\n",  # different width
        "garbage\n",
    ],
)
def test_corrupt_checkpoint_aborts(tmp_path, bad):
    cfg = _cfg(tmp_path, "bad")
    (tmp_path / "bad.ckpt").write_text(bad)
    with pytest.raises(CheckpointError):
        run_range(cfg)


def test_lost_failures_abort(tmp_path):
    cfg = _cfg(tmp_path, "lost")
    run_range(cfg)
    lines = (tmp_path / "lost.txt").read_text().splitlines(keepends=True)
    (tmp_path / "lost.txt").write_text("".join(lines[1:]))
    with pytest.raises(CheckpointError):
        run_range(cfg)


def test_kill_and_resume_matches_uninterrupted(tmp_path):
    args = ["--start", "10", "--end", "3000000", "--width", "65536", "--prime-cap", "5"]

    def cli(tag):
        return [
            sys.executable, "-m", "sqfreeprime", "--log-level", "warning", "verify", *args,
            "--checkpoint", str(tmp_path / f"{tag}.ckpt"), "--failures", str(tmp_path / f"{tag}.txt"),
        ]

    subprocess.run(cli("ref"), check=True, capture_output=True)

    proc = subprocess.Popen(cli("killed"), stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
    ckpt = tmp_path / "killed.ckpt"
    deadline = time.time() + 60
    while time.time() < deadline:
        if ckpt.exists() and len(ckpt.read_text().splitlines()) >= 5:
            break
        time.sleep(0.01)
    proc.send_signal(signal.SIGKILL)
    proc.wait()
    done = len(ckpt.read_text().splitlines())
    assert 5 <= done < 46, "run finished before it could be interrupted"

    out = subprocess.run(cli("killed"), capture_output=True, text=True)
    ref = subprocess.run(cli("ref"), capture_output=True, text=True)
    assert out.returncode == ref.returncode == 0
    assert out.stdout == ref.stdout
    assert (tmp_path / "killed.txt").read_bytes() == (tmp_path / "ref.txt").read_bytes()


# -- failure files and recheck ------------------------------------------------

@pytest.mark.parametrize(
    "line,record",
    [
        ("FAIL 123", FailureRecord(123)),
        ("RESOLVED 123 47", FailureRecord(123, 47, Status.RESOLVED)),
        ("REFUTED 99", FailureRecord(99, None, Status.REFUTED)),
    ],
)
def test_failure_line_roundtrip(line, record):
    assert parse_failure_line(line) == record
    assert record.to_line() == line


@pytest.mark.parametrize("line", ["FAIL", "FAIL -3", "RESOLVED 12", "fail 12", "FAIL 12 "])
def test_bad_failure_lines(line):
    with pytest.raises(ValueError):
        parse_failure_line(line)


def test_recheck_hardest_instance():
    records, hist = recheck_failures([FailureRecord(HARD_N)], 97)
    assert records == [FailureRecord(HARD_N, 73, Status.RESOLVED)]
    assert hist == {73: 1}


def test_recheck_empty():
    assert recheck_failures([], 1000) == ([], {})


def test_recheck_below_needed_cap_leaves_unresolved():
    records, hist = recheck_failures([FailureRecord(HARD_N)], 71)
    assert records[0].status is Status.UNRESOLVED and hist == {}


def test_escalate_resolves_with_any_prime():
    (rec,) = escalate([FailureRecord(HARD_N)])
    assert rec == FailureRecord(HARD_N, 73, Status.RESOLVED)


def test_escalate_marks_refuted(monkeypatch):
    monkeypatch.setattr(verifier, "smallest_representing_prime", lambda *a, **k: None)
    (rec,) = escalate([FailureRecord(1000)])
    assert rec.status is Status.REFUTED and rec.to_line() == "REFUTED 1000"


def _check_resolved(records, cap):
    for r in records:
        assert r.n % 4 != 1
        assert r.status is Status.RESOLVED
        p = r.resolved_by
        assert p > cap and is_prime_u64(p) and p * p < r.n
        assert is_squarefree_exact(r.n - p * p)


@pytest.mark.slow
def test_desk_run_to_1e8_with_small_cap():
    cfg = VerifierConfig(start=10, end=10**8, prime_cap=13, recheck_cap=43)
    report = run_range(cfg)
    assert report.failures
    records, hist = recheck_failures(report.failures, cfg.recheck_cap)
    _check_resolved(records, 13)
    recount = {}
    for r in report.failures:
        p = exact_ladder(r.n, 43)
        recount[p] = recount.get(p, 0) + 1
    assert None not in recount
    assert hist == dict(sorted(recount.items()))


@pytest.mark.slow
def test_failures_to_1e8_resolve_by_73():
    cfg = VerifierConfig(start=10, end=10**8, prime_cap=43, recheck_cap=73)
    report = run_range(cfg)
    records, _ = recheck_failures(report.failures, 73)
    _check_resolved(records, 43)
