"""Command-line front end: ``benson-entropy solve | verify | batch``.

Exit codes: 0 ok, 1 usage error, 2 capacity exceeded, 3 numerical failure,
4 empty feasible region, 5 verification failure.

The tolerance profile defaults to ``$BENSON_TOL_PROFILE`` (or ``default``)
and can be overridden with ``--tol``.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import benson, entropy_model as em, oracle
from .errors import (BensonError, CapacityExceeded, CopyStringError, EmptyRegion,
                     NumericalFailure, ReconstructionFailure, UnboundedLP)
from .sparse_lp import TOLERANCE_PROFILES

EXIT_OK, EXIT_USAGE, EXIT_CAPACITY, EXIT_NUMERICAL, EXIT_EMPTY, EXIT_VERIFY = range(6)
STATUS_OF_EXIT = {EXIT_OK: "ok", EXIT_USAGE: "usage", EXIT_CAPACITY: "capacity",
                  EXIT_NUMERICAL: "numerical-failure", EXIT_EMPTY: "empty"}
TOL_ENV = "BENSON_TOL_PROFILE"

#: Column order of the stats CSV.
STATS_COLUMNS = ("copy_string", "columns", "rows", "vertices", "facets", "hull_facets",
                 "time_s", "peak_vertices", "iterations", "lp_solves", "status")


@dataclass
class RunRecord:
    copy_string: str
    columns: int = 0
    rows: int = 0
    vertices: int = 0
    facets: int = 0
    hull_facets: int = 0
    time_s: float = 0.0
    peak_vertices: int = 0
    iterations: int = 0
    lp_solves: int = 0
    status: str = "ok"

    def row(self) -> list:
        d = asdict(self)
        d["time_s"] = f"{self.time_s:.3f}"
        return [d[c] for c in STATS_COLUMNS]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _profile(name: Optional[str]):
    name = name or os.environ.get(TOL_ENV) or "default"
    if name not in TOLERANCE_PROFILES:
        raise KeyError(name)
    return TOLERANCE_PROFILES[name]


def _config(args) -> benson.RunConfig:
    return benson.RunConfig(seed=args.seed, max_vertices=args.max_cells,
                            max_facets=args.max_cells, tol=_profile(args.tol),
                            checkpoint_interval=args.checkpoint)


def _inequality_lines(solution, copy_string) -> list[str]:
    lines = []
    for v in solution.extremal_vertices:
        try:
            lines.append(em.format_inequality(v, copy_string=copy_string).to_line())
        except ReconstructionFailure as exc:
            lines.append("# unreconstructed vertex " + " ".join(repr(float(c)) for c in v)
                         + f" ({exc})")
    return lines


def _vertex_lines(solution) -> list[str]:
    return [" ".join(repr(float(c)) for c in v) for v in solution.extremal_vertices]


def solve_one(copy_string: Optional[str], problem_path: Optional[str], config,
              lines_out: Optional[list] = None) -> tuple[int, RunRecord]:
    """Run one problem; returns the exit code and a stats record."""
    label = copy_string if copy_string is not None else (problem_path or "")
    rec = RunRecord(label)
    t0 = time.perf_counter()
    lines = lines_out if lines_out is not None else []
    code = EXIT_OK
    try:
        if copy_string is not None:
            ep = em.build_problem(copy_string)
            problem = ep.problem
        else:
            with open(problem_path) as fh:
                problem = benson.MolpProblem.load(fh)
        rec.columns, rec.rows = problem.n, problem.m
        try:
            sol = benson.run(problem, config)
        except CapacityExceeded as exc:
            sol = exc.partial
            code = EXIT_CAPACITY
            print(f"capacity exceeded: {exc}", file=sys.stderr)
        if sol is not None:
            lines.extend(_inequality_lines(sol, copy_string) if copy_string is not None
                         else _vertex_lines(sol))
            rec.vertices = len(sol.extremal_vertices)
            rec.facets = facet_count(sol)
            rec.hull_facets = len(sol.facets)
            rec.peak_vertices = sol.stats.peak_vertices
            rec.iterations = sol.stats.iterations
            rec.lp_solves = sol.stats.lp_solves
    except CopyStringError as exc:
        print(str(exc), file=sys.stderr)
        code = EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_USAGE
    except EmptyRegion as exc:
        print(f"empty feasible region: {exc}", file=sys.stderr)
        code = EXIT_EMPTY
    except (NumericalFailure, UnboundedLP, BensonError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        code = EXIT_NUMERICAL
    rec.time_s = time.perf_counter() - t0
    rec.status = STATUS_OF_EXIT[code]
    return code, rec


def facet_count(sol) -> int:
    """Facet count of the stats CSV (see ``Solution.facet_count``)."""
    return sol.facet_count


def _write_stats(path: Optional[str], records, stream=None) -> None:
    fh = open(path, "w", newline="") if path else stream
    try:
        w = csv.writer(fh)
        w.writerow(STATS_COLUMNS)
        for rec in records:
            w.writerow(rec.row())
    finally:
        if path:
            fh.close()


def cmd_solve(args) -> int:
    try:
        config = _config(args)
    except KeyError as exc:
        print(f"unknown tolerance profile {exc}", file=sys.stderr)
        return EXIT_USAGE
    lines: list[str] = []
    code, rec = solve_one(args.copy, args.problem, config, lines)
    text = "".join(ln + "\n" for ln in lines)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.stats:
        _write_stats(args.stats, [rec])
    if code != EXIT_USAGE:
        print(f"{rec.status}: {rec.vertices} vertices, {rec.facets} facets, "
              f"{rec.iterations} iterations, {rec.time_s:.2f}s", file=sys.stderr)
    return code


# -- verification -------------------------------------------------------------


def verify_inequalities(ep: em.EntropyProblem, inequalities, config) -> list[str]:
    """Check each inequality's point lies in ``Q+`` and cannot be lowered.

    Returns a list of failure messages (empty when everything checks out).
    """
    failures = []
    for k, ineq in enumerate(inequalities):
        tag = f"inequality {k + 1} ({ineq.to_line().split('#')[0].strip()})"
        y = ineq.objective_point()
        margin, _ = benson.membership_margin(ep.problem, y, config)
        if margin < -1e-7:
            failures.append(f"{tag}: not implied by the copy constraints "
                            f"(membership LP margin {margin:.3g})")
            continue
        for i in range(ep.problem.p):
            slack = benson.coordinate_slack(ep.problem, y, i, config)
            if slack > 1e-7:
                name = em.OBJECTIVE_NAMES[i]
                failures.append(f"{tag}: coefficient of {name} can be lowered by {slack:.3g}"
                                " (not extremal)")
                break
    return failures


def _same_sets(a, b, tol=1e-6) -> bool:
    if len(a) != len(b):
        return False
    pending = list(b)
    for u in a:
        hit = next((k for k, v in enumerate(pending) if np.max(np.abs(u - v)) <= tol), None)
        if hit is None:
            return False
        pending.pop(hit)
    return True


def cmd_verify(args) -> int:
    try:
        config = _config(args)
    except KeyError as exc:
        print(f"unknown tolerance profile {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.inequalities:
        if not args.copy:
            print("--inequalities requires --copy", file=sys.stderr)
            return EXIT_USAGE
        try:
            ep = em.build_problem(args.copy)
            with open(args.inequalities) as fh:
                ineqs = [em.EntropyInequality.from_line(ln) for ln in fh
                         if ln.split("#", 1)[0].strip()]
        except (CopyStringError, OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        failures = verify_inequalities(ep, ineqs, config)
        for msg in failures:
            print("FAIL " + msg)
        print(f"{'PASS' if not failures else 'FAIL'}: {len(ineqs)} inequalities checked, "
              f"{len(failures)} failures")
        return EXIT_OK if not failures else EXIT_VERIFY
    if args.problem and args.oracle:
        try:
            with open(args.problem) as fh:
                problem = benson.MolpProblem.load(fh)
            truth = oracle.pareto_vertices(problem)
        except (OSError, ValueError, BensonError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        sol = benson.run(problem, config)
        ok = _same_sets(truth, sol.extremal_vertices)
        print(f"{'PASS' if ok else 'FAIL'}: oracle {len(truth)} vertices, "
              f"outer approximation {len(sol.extremal_vertices)} vertices")
        return EXIT_OK if ok else EXIT_VERIFY
    print("verify needs --inequalities with --copy, or --problem with --oracle",
          file=sys.stderr)
    return EXIT_USAGE


# -- batch --------------------------------------------------------------------


def _batch_worker(job):
    copy_string, config = job
    code, rec = solve_one(copy_string, None, config)
    return code, rec


def cmd_batch(args) -> int:
    try:
        config = _config(args)
        with open(args.list) as fh:
            strings = [ln.split("#", 1)[0].strip() for ln in fh]
    except KeyError as exc:
        print(f"unknown tolerance profile {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    strings = [s for s in strings if s]
    jobs = [(s, config) for s in strings]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_batch_worker, jobs))
    else:
        results = [_batch_worker(j) for j in jobs]
    if args.stats:
        _write_stats(args.stats, [r for _, r in results])
    else:
        _write_stats(None, [r for _, r in results], sys.stdout)
    return max((c for c, _ in results), default=EXIT_OK)


# -- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="benson-entropy", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
        sp.add_argument("--max-cells", type=int, default=benson.DEFAULT_CAPACITY,
                        help="vertex and facet capacity of the outer polytope")
        sp.add_argument("--checkpoint", type=int, default=60,
                        help="refactor the simplex basis every K pivots")
        sp.add_argument("--tol", choices=sorted(TOLERANCE_PROFILES),
                        help=f"tolerance profile (default ${TOL_ENV} or 'default')")

    s = sub.add_parser("solve", help="enumerate extremal vertices of one problem")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--copy", help="copy string, e.g. 'r=c:ab;s=r:ac;t=r:ad'")
    g.add_argument("--problem", help="problem file (three sparse triplet blocks A, b, P)")
    common(s)
    s.add_argument("--out", help="write inequalities here instead of stdout")
    s.add_argument("--stats", help="write a one-row stats CSV here")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="recheck inequalities or compare against the oracle")
    v.add_argument("--inequalities", help="inequality file produced by 'solve'")
    v.add_argument("--copy", help="copy string the inequalities came from")
    v.add_argument("--problem", help="problem file")
    v.add_argument("--oracle", action="store_true", help="compare with brute-force enumeration")
    common(v)
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("batch", help="solve a list of copy strings and emit a stats CSV")
    b.add_argument("--list", required=True, help="file with one copy string per line")
    b.add_argument("--stats", help="CSV output file (default stdout)")
    b.add_argument("--jobs", type=int, default=1, help="worker processes")
    common(b)
    b.set_defaults(func=cmd_batch)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    if getattr(args, "max_cells", 1) < 1 or getattr(args, "checkpoint", 1) < 1:
        print("--max-cells and --checkpoint must be positive", file=sys.stderr)
        return EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
