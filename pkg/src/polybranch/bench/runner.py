"""Run branching approaches over instance sets and collect report rows."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from ..engine import EngineConfig, RulePolicy, SolveResult, solve
from ..experts import BRulePolicy, BVarPolicy, orule_select
from ..poly import POProblem
from ..rules import ALL_RULES, RuleId
from .fileformat import read_problem
from .metrics import RunRow, pace_lb

log = logging.getLogger(__name__)



@dataclass(frozen=True)
class Approach:
    """A parsed approach name.

    ``dual`` .. ``eigen_rel`` are the fixed rules; ``orule_s``; ``brule_d_opt``
    / ``brule_d_fix``; ``bvar_d`` / ``bvar_d_opt`` / ``bvar_d_fix``, optionally
    suffixed ``:tau`` (e.g. ``bvar_d_opt:0.01``).  ``_opt`` variants fall back
    on the instance's best fixed rule, ``_fix`` variants on a configured rule.
    """

    name: str
    kind: str
    rule: RuleId | None = None
    fallback: str = "opt"
    tau: float = 0.0

    @classmethod
    def parse(cls, text: str) -> "Approach":
        text = text.strip()
        base, _, tau_text = text.partition(":")
        tau = float(tau_text) if tau_text else 0.0
        if tau < 0:
            raise ValueError(f"negative tie threshold in {text!r}")
        if base in {r.value for r in RuleId}:
            if tau_text:
                raise ValueError(f"rule {base!r} takes no threshold")
            return cls(text, "rule", rule=RuleId.parse(base))
        if base == "orule_s":
            return cls(text, "orule")
        for prefix in ("brule_d", "bvar_d"):
            if base == prefix or base.startswith(prefix + "_"):
                suffix = base[len(prefix) :].lstrip("_") or "opt"
                if suffix not in ("opt", "fix"):
                    raise ValueError(f"unknown fallback {suffix!r} in {text!r}")
                if prefix == "brule_d" and tau_text:
                    raise ValueError("brule_d takes no threshold")
                return cls(text, prefix, fallback=suffix, tau=tau)
        raise ValueError(f"unknown approach {text!r}")

    @property
    def needs_rules(self) -> bool:
        return self.kind == "orule" or (self.kind in ("brule_d", "bvar_d") and self.fallback == "opt")


def result_row(instance: str, approach: str, r: SolveResult) -> RunRow:
    if r.solved:
        a, rel = r.gap()
        g = 0.0 if not math.isfinite(min(a, rel)) else min(a, rel)
    elif math.isfinite(r.best_ub) and math.isfinite(r.best_lb):
        g = min(r.gap())
    else:
        g = None
    return RunRow(
        instance=instance,
        approach=approach,
        solved=r.solved,
        gap=g,
        time=float(r.wall_time),
        pace=pace_lb(r),
        nodes=int(r.nodes_explored),
    )


def run_instance(
    problem: POProblem,
    approaches: Sequence[str | Approach],
    cfg: EngineConfig,
    fix_rule: RuleId = RuleId.RANGE_REL,
    metric: str = "pace",
) -> tuple[list[RunRow], dict[str, SolveResult]]:
    parsed = [a if isinstance(a, Approach) else Approach.parse(a) for a in approaches]
    results: dict[str, SolveResult] = {}
    rule_results: dict[RuleId, SolveResult] = {}
    winner = None
    if any(a.needs_rules for a in parsed):
        for rule in ALL_RULES:
            rule_results[rule] = solve(problem, replace(cfg, policy=RulePolicy(rule)))
        winner = orule_select(rule_results, metric)
    for a in parsed:
        if a.kind == "rule":
            r = rule_results.get(a.rule) or solve(problem, replace(cfg, policy=RulePolicy(a.rule)))
        elif a.kind == "orule":
            r = rule_results[winner]
        else:
            fb = winner if a.fallback == "opt" else fix_rule
            if a.kind == "brule_d":
                policy = BRulePolicy(fb, label=a.name)
            else:
                policy = BVarPolicy(fb, a.tau, label=a.name)
            r = solve(problem, replace(cfg, policy=policy))
        results[a.name] = r
    rows = [result_row(problem.name, a.name, results[a.name]) for a in parsed]
    return rows, results


def _run_file(args) -> list[RunRow]:
    path, approaches, cfg, fix_rule, metric = args
    problem = read_problem(path)
    rows, _ = run_instance(problem, approaches, cfg, fix_rule, metric)
    log.info("finished %s", problem.name)
    return rows


def run_benchmark(
    paths: Sequence[Path],
    approaches: Sequence[str],
    cfg: EngineConfig,
    jobs: int = 1,
    fix_rule: RuleId = RuleId.RANGE_REL,
    metric: str = "pace",
) -> list[RunRow]:
    for a in approaches:
        Approach.parse(a)
    tasks = [(Path(p), list(approaches), cfg, fix_rule, metric) for p in sorted(paths)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(_run_file, tasks))
    else:
        chunks = [_run_file(t) for t in tasks]
    rows = [r for chunk in chunks for r in chunk]
    return sorted(rows, key=lambda r: (r.instance, r.approach))
