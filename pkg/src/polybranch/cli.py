"""Command line entry point: ``polybranch {solve,bench,gen,profile,aggregate}``."""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from .bench.fileformat import ProblemParseError, read_problem, write_problem
from .bench.generator import gen_instance
from .bench.metrics import GAP_SHIFT, TIME_FLOOR, aggregate, performance_profile, profile_rows
from .bench.report import ReportFormatError, dumps_profile, read_report, write_report
from .bench.runner import Approach, run_benchmark, run_instance
from .engine import EngineConfig, write_trace
from .lp import LPNumericalError
from .rules import RuleId

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 2, 3


class InputError(Exception):
    pass


def _config(args) -> EngineConfig:
    deterministic = getattr(args, "deterministic", False)
    node_limit = args.node_limit
    if deterministic and node_limit is None:
        node_limit = 2000
    return EngineConfig(
        time_limit=args.time_limit,
        node_limit=node_limit,
        rel_gap_tol=args.gap_tol,
        abs_gap_tol=args.gap_tol,
        deterministic=deterministic,
    )


def _rule(text: str) -> RuleId:
    try:
        return RuleId.parse(text)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def cmd_solve(args) -> int:
    problem = read_problem(args.instance)
    cfg = _config(args)
    if args.rule:
        name = _rule(args.rule).label
    else:
        expert = args.expert
        if expert == "orule_s":
            name = "orule_s"
        elif expert in ("brule_d", "bvar_d"):
            if args.fallback in (None, "orule", "opt"):
                name = f"{expert}_opt"
            else:
                _rule(args.fallback)
                name = f"{expert}_fix"
            if expert == "bvar_d" and args.tie_tau:
                name += f":{args.tie_tau:g}"
        else:
            raise InputError(f"unknown expert {expert!r}")
    fix_rule = _rule(args.fallback) if args.fallback not in (None, "orule", "opt") else RuleId.RANGE_REL
    rows, results = run_instance(problem, [Approach.parse(name)], cfg, fix_rule=fix_rule)
    r = results[name]
    row = rows[0]
    print(f"instance   {problem.name}")
    print(f"approach   {name}")
    print(f"status     {r.status}")
    print(f"lower      {r.best_lb!r}")
    print(f"upper      {r.best_ub!r}")
    print(f"gap        {'-' if row.gap is None else repr(row.gap)}")
    print(f"nodes      {r.nodes_explored}")
    print(f"time       {r.wall_time:.3f}")
    print(f"pace       {row.pace!r}")
    if r.incumbent is not None:
        print("incumbent  " + " ".join(f"{v:.9g}" for v in r.incumbent))
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            write_trace(r, fh)
    return EXIT_SOLVER if r.status == "failed" else EXIT_OK


def cmd_bench(args) -> int:
    paths = sorted(Path(args.dir).glob("*.pop"))
    if not paths:
        raise InputError(f"no .pop files in {args.dir}")
    approaches = [a.strip() for a in args.approaches.split(",") if a.strip()]
    try:
        for a in approaches:
            Approach.parse(a)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    rows = run_benchmark(paths, approaches, _config(args), jobs=args.jobs, fix_rule=_rule(args.fix_rule))
    write_report(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for k in range(args.count):
        seed = args.seed + k
        try:
            p = gen_instance(args.vars, args.degree, args.density, seed)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        (out / f"{p.name}.pop").write_text(write_problem(p), encoding="utf-8")
    print(f"wrote {args.count} instances to {out}")
    return EXIT_OK


def profile_matrix(rows, metric: str) -> dict[str, list[float]]:
    """Per-approach metric vectors over the sorted instance set; unsolved or
    missing entries are ``inf``."""
    instances = sorted({r.instance for r in rows})
    approaches = list(dict.fromkeys(r.approach for r in rows))
    by = {(r.instance, r.approach): r for r in rows}

    def value(r) -> float:
        if metric == "time":
            return max(r.time, TIME_FLOOR) if r.solved else math.inf
        if metric == "gap":
            return math.inf if r.gap is None else r.gap + GAP_SHIFT
        return r.pace

    return {a: [value(by[i, a]) if (i, a) in by else math.inf for i in instances] for a in approaches}


def cmd_profile(args) -> int:
    rows = read_report(args.report)
    curves = performance_profile(profile_matrix(rows, args.metric))
    Path(args.out).write_text(dumps_profile(profile_rows(curves)), encoding="utf-8")
    print(f"wrote {args.metric} profile for {len(curves)} approaches to {args.out}")
    return EXIT_OK


def cmd_aggregate(args) -> int:
    rows = read_report(args.report)
    print(aggregate(rows, easy_time=args.easy_time).format())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polybranch", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def limits(p):
        p.add_argument("--time-limit", type=float, default=600.0)
        p.add_argument("--node-limit", type=int, default=None)
        p.add_argument("--gap-tol", type=float, default=1e-3)

    s = sub.add_parser("solve", help="solve one instance")
    s.add_argument("--instance", required=True)
    grp = s.add_mutually_exclusive_group(required=True)
    grp.add_argument("--rule")
    grp.add_argument("--expert", choices=("orule_s", "brule_d", "bvar_d"))
    s.add_argument("--fallback", default=None, help="rule name, or 'orule' for the per-instance best rule")
    s.add_argument("--tie-tau", type=float, default=0.0)
    s.add_argument("--trace")
    limits(s)
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="run approaches on every .pop file in a directory")
    b.add_argument("--dir", required=True)
    b.add_argument("--approaches", required=True, help="comma-separated approach names")
    b.add_argument("--out", required=True)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--deterministic", action="store_true", help="node-count clock; needs or implies a node limit")
    b.add_argument("--fix-rule", default="range_rel", help="fallback rule of the *_fix experts")
    limits(b)
    b.set_defaults(func=cmd_bench)

    g = sub.add_parser("gen", help="generate random instances")
    g.add_argument("--vars", type=int, required=True)
    g.add_argument("--degree", type=int, required=True)
    g.add_argument("--density", type=float, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    p = sub.add_parser("profile", help="performance profile from a report")
    p.add_argument("--report", required=True)
    p.add_argument("--metric", choices=("time", "gap", "pace"), required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_profile)

    a = sub.add_parser("aggregate", help="print the metric table of a report")
    a.add_argument("--report", required=True)
    a.add_argument("--easy-time", type=float, default=5.0)
    a.set_defaults(func=cmd_aggregate)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (InputError, ProblemParseError, ReportFormatError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except LPNumericalError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
