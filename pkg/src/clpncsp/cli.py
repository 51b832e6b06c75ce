"""Command-line front end: load a program and answer queries.

Exit status is 0 when at least one answer was printed, 1 on finite failure,
2 when a resource limit ended the search without answers, and 3 on file or
syntax errors.
"""

from __future__ import annotations

import argparse
import sys
from typing import TextIO

from .clp import ClpTypeError, InstantiationError, Options, Program, SolveStats, solve
from .parser import ParseError, parse_program, parse_query

EXIT_ANSWER, EXIT_FAILURE, EXIT_BUDGET, EXIT_ERROR = 0, 1, 2, 3


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text}")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text}")
    return v


def _nonneg_float(text: str) -> float:
    v = float(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative: {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="clpncsp",
        description="Answer queries against a constraint logic program over real intervals.",
    )
    p.add_argument("program", help="program file (.ncsp)")
    p.add_argument("query", nargs="?", help="query such as ':- <0|X|1>; p(X).'; omit for a prompt")
    p.add_argument("--eps-split", type=_positive_float, default=1e-6, help="stop splitting below this width")
    p.add_argument("--tau", type=_nonneg_float, default=0.0, help="relative shrink needed to requeue constraints")
    p.add_argument("--max-answers", type=_positive_int, default=10)
    p.add_argument("--max-boxes", type=_positive_int, default=4096, help="box budget per answer")
    p.add_argument("--depth", type=_positive_int, default=64, help="resolution steps per derivation")
    p.add_argument("--time-limit", type=_positive_float, default=None, help="seconds for the whole search")
    p.add_argument("--no-consolidate", action="store_true", help="print enumeration boxes unmerged")
    p.add_argument("--trace", action="store_true", help="print one line per transition")
    p.add_argument("--digits", type=_positive_int, default=17, help="significant digits for endpoints")
    return p


def options_from(args: argparse.Namespace, out: TextIO) -> Options:
    return Options(
        eps_split=args.eps_split,
        tau=args.tau,
        max_answers=args.max_answers,
        max_boxes=args.max_boxes,
        depth=args.depth,
        consolidate=not args.no_consolidate,
        trace=(lambda line: print(line, file=out)) if args.trace else None,
        time_limit=args.time_limit,
    )


def run_query(program: Program, text: str, opts: Options, digits: int, out: TextIO, err: TextIO) -> int:
    try:
        query = parse_query(text)
    except ParseError as e:
        print(f"query: {e}", file=err)
        return EXIT_ERROR
    stats = SolveStats()
    n = 0
    try:
        for answer in solve(program, query, opts, stats):
            if n:
                print(";", file=out)
            lines = answer.format(digits)
            print("\n".join(lines) if lines else "true", file=out)
            n += 1
    except (InstantiationError, ClpTypeError) as e:
        print(f"error: {e}", file=err)
        return EXIT_ERROR
    if n:
        print(".", file=out)
    if stats.budget_hit:
        parts = []
        if stats.depth_cutoffs:
            parts.append(f"depth limit {opts.depth} cut {stats.depth_cutoffs} derivation(s)")
        if stats.box_overflows:
            parts.append(f"box budget {opts.max_boxes} exceeded {stats.box_overflows} time(s)")
        if stats.timed_out:
            parts.append(f"time limit {opts.time_limit}s reached")
        print("% budget exceeded: " + "; ".join(parts), file=err)
    if n:
        return EXIT_ANSWER
    if stats.budget_hit:
        return EXIT_BUDGET
    print("false.", file=out)
    return EXIT_FAILURE


def repl(program: Program, opts: Options, digits: int, inp: TextIO, out: TextIO, err: TextIO) -> int:
    status = EXIT_FAILURE
    while True:
        print("?- ", end="", file=out, flush=True)
        line = inp.readline()
        if not line:
            print(file=out)
            return status
        line = line.strip()
        if not line:
            continue
        if line in ("halt.", "halt"):
            return status
        status = run_query(program, line, opts, digits, out, err)


def main(argv: list[str] | None = None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        with open(args.program, encoding="utf-8") as f:
            source = f.read()
    except OSError as e:
        print(f"{args.program}: {e.strerror}", file=err)
        return EXIT_ERROR
    try:
        program = Program(parse_program(source))
    except ParseError as e:
        print(f"{args.program}: {e}", file=err)
        return EXIT_ERROR
    opts = options_from(args, out)
    if args.query is None:
        return repl(program, opts, args.digits, sys.stdin, out, err)
    return run_query(program, args.query, opts, args.digits, out, err)


if __name__ == "__main__":
    sys.exit(main())
