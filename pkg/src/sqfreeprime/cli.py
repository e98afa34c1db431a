"""Command line front end.

Results go to stdout, logs and diagnostics to stderr.  Exit status is 0 on
success, 1 on bad input, and 2 when something that should be representable
was not (unresolved failures, a table mismatch).
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from typing import Optional, Sequence

from . import analytic
from .verifier import (
    DEFAULT_PRIME_CAP,
    DEFAULT_RECHECK_CAP,
    CheckpointError,
    Status,
    VerifierConfig,
    escalate,
    read_failures,
    recheck_failures,
    run_range,
    smallest_representing_prime,
    write_failures,
)
from .sieve import DEFAULT_SEGMENT_WIDTH

EXIT_OK, EXIT_USAGE, EXIT_UNRESOLVED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _int(text: str) -> int:
    if not text.isdigit():
        raise argparse.ArgumentTypeError(f"expected a non-negative decimal integer, got {text!r}")
    return int(text)


def _real(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not math.isfinite(x):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {text!r}")
    return x


def _grid(text: str) -> list[float]:
    try:
        return analytic.parse_grid(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sqfreeprime", description=__doc__.splitlines()[0])
    parser.add_argument("--log-level", default="INFO", help="stderr log level (default INFO)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("verify", help="verify a range of n with the windowed sieve")
    p.add_argument("--start", type=_int, default=10)
    p.add_argument("--end", type=_int, required=True)
    p.add_argument("--width", type=_int, default=DEFAULT_SEGMENT_WIDTH)
    p.add_argument("--prime-cap", type=_int, default=DEFAULT_PRIME_CAP)
    p.add_argument("--recheck-cap", type=_int, default=DEFAULT_RECHECK_CAP)
    p.add_argument("--workers", type=_int, default=1)
    p.add_argument("--checkpoint")
    p.add_argument("--failures")

    p = sub.add_parser("check-n", help="smallest prime p with n - p^2 square-free")
    p.add_argument("n", type=_int)
    p.add_argument("--cap", type=_int, default=DEFAULT_PRIME_CAP)

    p = sub.add_parser("recheck", help="recheck a failure file with a larger prime cap")
    p.add_argument("path")
    p.add_argument("--cap", type=_int, default=DEFAULT_RECHECK_CAP)

    p = sub.add_parser("bounds", help="evaluate the lower bound for R(n)")
    p.add_argument("--n", type=_real, required=True)
    p.add_argument("--c", type=_real, default=analytic.BoundParams.c)
    p.add_argument("--A", type=_real, default=analytic.BoundParams.A)

    p = sub.add_parser("threshold", help="locate where the lower bound turns positive")
    p.add_argument("--c", type=_real, default=analytic.BoundParams.c)
    p.add_argument("--A", type=_real, default=analytic.BoundParams.A)
    p.add_argument("--n-max", type=_real, default=1e20)

    p = sub.add_parser("optimize", help="grid search for (c, A)")
    p.add_argument("--n", type=_real, required=True)
    p.add_argument("--c-grid", type=_grid, required=True)
    p.add_argument("--A-grid", type=_grid, required=True)

    sub.add_parser("tables", help="reproduce the epsilon constant tables")
    return parser


def _summary(records) -> tuple[int, int]:
    unresolved = sum(r.status is not Status.RESOLVED for r in records)
    return len(records), unresolved


def _print_hist(hist: dict[int, int]) -> None:
    for p, count in hist.items():
        print(f"HIST {p} {count}")


def cmd_verify(args) -> int:
    cfg = VerifierConfig(
        start=args.start,
        end=args.end,
        window_width=args.width,
        prime_cap=args.prime_cap,
        recheck_cap=args.recheck_cap,
        worker_count=args.workers,
        checkpoint_path=args.checkpoint,
        failure_path=args.failures,
    )
    report = run_range(cfg)
    records, hist = recheck_failures(report.failures, cfg.recheck_cap)
    records = escalate(records)
    if cfg.failure_path:
        write_failures(cfg.failure_path, records)
    _print_hist(hist)
    total, unresolved = _summary(records)
    print(f"SUMMARY checked={report.checked_count} failures={total} unresolved={unresolved}")
    return EXIT_UNRESOLVED if unresolved else EXIT_OK


def cmd_check_n(args) -> int:
    p = smallest_representing_prime(args.n, args.cap, exact=True)
    print(f"{args.n} {p if p is not None else 'none'}")
    return EXIT_OK if p is not None else EXIT_UNRESOLVED


def cmd_recheck(args) -> int:
    records, hist = recheck_failures(read_failures(args.path), args.cap)
    write_failures(args.path, records)
    _print_hist(hist)
    total, unresolved = _summary(records)
    print(f"SUMMARY records={total} resolved={total - unresolved} unresolved={unresolved}")
    return EXIT_UNRESOLVED if unresolved else EXIT_OK


def _print_breakdown(b: analytic.BoundBreakdown) -> None:
    for key, value in b.lines():
        print(f"{key}\t{value:.6f}")


def cmd_bounds(args) -> int:
    b = analytic.r_lower(args.n, analytic.BoundParams(args.c, args.A))
    _print_breakdown(b)
    if not b.certified:
        logging.warning("n < 2.5e14: the q <= 97 constants are not valid here")
    return EXIT_OK


def cmd_threshold(args) -> int:
    params = analytic.BoundParams(args.c, args.A)
    try:
        t = analytic.find_threshold(params, args.n_max)
    except analytic.NoCrossoverError as exc:
        print("status\tnegative_throughout")
        logging.error("%s", exc)
        return EXIT_UNRESOLVED
    print(f"threshold\t{t.value}")
    print(f"status\t{t.status}")
    print(f"grid_points\t{t.grid_points}")
    return EXIT_OK


def cmd_optimize(args) -> int:
    params = analytic.optimize_params(args.n, args.c_grid, args.A_grid)
    print(f"c\t{params.c:.6f}")
    print(f"A\t{params.A:.6f}")
    _print_breakdown(analytic.r_lower(args.n, params))
    return EXIT_OK


def cmd_tables(args) -> int:
    print("q\teps_1e10\tomega_1e10\tomega_branch\teps_T\tpublished\tbranch\tmatch")
    params = analytic.BoundParams()
    mismatches = 0
    for e in analytic.epsilon_entries(params):
        published = analytic.EPSILON_T_PUBLISHED[e.q]
        ok = str(e.eps_T) == published
        mismatches += not ok
        omega_branch = e.omega_1e10 * analytic.euler_phi_prime_square(e.q) / math.sqrt(params.T)
        print(
            f"{e.q}\t{analytic.EPSILON_1E10[e.q]}\t{e.omega_1e10:.6f}\t{omega_branch:.6f}"
            f"\t{e.eps_T}\t{published}\t{e.branch}\t{'ok' if ok else 'MISMATCH'}"
        )
    print(f"SUMMARY entries={len(analytic.SMALL_MODULI)} mismatches={mismatches}")
    return EXIT_UNRESOLVED if mismatches else EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "check-n": cmd_check_n,
    "recheck": cmd_recheck,
    "bounds": cmd_bounds,
    "threshold": cmd_threshold,
    "optimize": cmd_optimize,
    "tables": cmd_tables,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    try:
        logging.basicConfig(
            level=args.log_level.upper(),
            stream=sys.stderr,
            format="%(levelname)s %(name)s: %(message)s",
            force=True,
        )
        return COMMANDS[args.command](args)
    except (ValueError, CheckpointError, OSError) as exc:
        print(f"sqfreeprime {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
