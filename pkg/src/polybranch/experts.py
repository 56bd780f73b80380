"""Expert branching policies.

* ``BVarPolicy``: strong branching.  Probe every candidate variable and branch
  on the best KPI, deferring to a fallback rule when no candidate improves the
  bound by more than a threshold.
* ``BRulePolicy``: probe the variable each of the six rules would pick and
  follow the rule with the best KPI.
* ``orule_select``: after running all six rules on an instance, pick the best
  one by a metric (pace by default).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .engine import BBNode, Branching, ChildProbe, SearchContext, SolveResult
from .lp import LPNumericalError
from .rules import ALL_RULES, WIDTH_FLOOR, RuleId, choose_with_rule, nonlinear_variables

TIE_EPS = 1e-9


@dataclass
class KPIRecord:
    variable: int
    kpi: float
    point: float
    left: ChildProbe
    right: ChildProbe


def rule_choices(ctx: SearchContext, node: BBNode, rules: Sequence[RuleId] = ALL_RULES) -> dict[RuleId, int | None]:
    out = {}
    for rule in rules:
        cent = ctx.centrality if rule.base is RuleId.EIGEN else None
        out[rule] = choose_with_rule(rule, node.bounds, node.model, node.solution, ctx.idx, ctx.stats, cent)
    return out


def bvar_candidates(ctx: SearchContext, node: BBNode) -> list[int]:
    """Nonlinear variables whose node interval is wider than the floor."""
    return [j for j in nonlinear_variables(ctx.idx) if node.bounds.width(j) > WIDTH_FLOOR]


def strong_branch_scan(ctx: SearchContext, node: BBNode, candidates) -> dict[int, KPIRecord]:
    table: dict[int, KPIRecord] = {}
    for j in sorted(set(candidates)):
        point = ctx.point(node, j)
        try:
            left, right, kpi = ctx.probe(node, j, point)
        except LPNumericalError:
            continue
        table[j] = KPIRecord(j, kpi, point, left, right)
    return table


def _kpi_order(kpi: float) -> float:
    return math.inf if kpi == math.inf else kpi


def bvar_select(kpis: Mapping[int, float], tau: float, parent_lb: float, fallback: int | None) -> int:
    """Best-KPI variable; the fallback choice when the best relative KPI is <= tau
    or when it is among the best within ``TIE_EPS``."""
    if not kpis:
        raise ValueError("empty KPI table")
    best = max(kpis.values())
    scale = max(1.0, abs(parent_lb)) if math.isfinite(parent_lb) else 1.0
    if fallback is not None and best / scale <= tau:
        return fallback
    if best == math.inf:
        tied = sorted(j for j, k in kpis.items() if k == math.inf)
    else:
        tied = sorted(j for j, k in kpis.items() if k >= best - TIE_EPS)
    if fallback in tied:
        return fallback
    return tied[0]


def brule_select(
    ctx: SearchContext, node: BBNode, fallback: RuleId, rules: Sequence[RuleId] = ALL_RULES
) -> tuple[RuleId, int, dict[RuleId, int | None], dict[int, KPIRecord]] | None:
    """Rule whose chosen variable gives the best KPI; ties go to ``fallback``,
    then to the first rule in canonical order."""
    choices = rule_choices(ctx, node, rules)
    table = strong_branch_scan(ctx, node, [j for j in choices.values() if j is not None])
    scored = {r: table[j].kpi for r, j in choices.items() if j is not None and j in table}
    if not scored:
        return None
    best = max(scored.values())
    if best == math.inf:
        tied = [r for r in rules if scored.get(r) == math.inf]
    else:
        tied = [r for r in rules if r in scored and scored[r] >= best - TIE_EPS]
    winner = fallback if fallback in tied else tied[0]
    return winner, choices[winner], choices, table


class BVarPolicy:
    def __init__(self, fallback: RuleId = RuleId.RANGE_REL, tau: float = 0.0, label: str = "bvar_d"):
        if tau < 0:
            raise ValueError("tie threshold must be >= 0")
        self.fallback = fallback
        self.tau = tau
        self.label = label

    def decide(self, ctx: SearchContext, node: BBNode) -> Branching | None:
        choices = rule_choices(ctx, node)
        fb = choices[self.fallback]
        cands = set(bvar_candidates(ctx, node))
        cands.update(j for j in choices.values() if j is not None)
        if not cands:
            return None
        table = strong_branch_scan(ctx, node, cands)
        if not table:
            raise LPNumericalError("every strong-branching probe failed")
        kpis = {j: rec.kpi for j, rec in table.items()}
        j = bvar_select(kpis, self.tau, node.lb, fb if fb in table else None)
        rec = table[j]
        return Branching(
            j,
            self.label,
            point=rec.point,
            children=(rec.left, rec.right),
            kpi_table=kpis,
            rule_choices={r.label: v for r, v in choices.items()},
            rule_kpis={r.label: kpis[v] for r, v in choices.items() if v in kpis},
        )


class BRulePolicy:
    def __init__(self, fallback: RuleId = RuleId.RANGE_REL, label: str = "brule_d"):
        self.fallback = fallback
        self.label = label

    def decide(self, ctx: SearchContext, node: BBNode) -> Branching | None:
        picked = brule_select(ctx, node, self.fallback)
        if picked is None:
            return None
        winner, j, choices, table = picked
        rec = table[j]
        return Branching(
            j,
            winner.label,
            point=rec.point,
            children=(rec.left, rec.right),
            kpi_table={v: r.kpi for v, r in table.items()},
            rule_choices={r.label: v for r, v in choices.items()},
            rule_kpis={r.label: table[v].kpi for r, v in choices.items() if v in table},
        )


def result_gap(r: SolveResult) -> float:
    a, rel = r.gap()
    return min(a, rel)


def orule_select(results: Mapping[RuleId, SolveResult], metric: str = "pace") -> RuleId:
    """Best rule on one instance.  Ties: solved first, then time, then gap, then rule order."""
    from .bench.metrics import pace_lb

    missing = [r for r in ALL_RULES if r not in results]
    if missing:
        raise ValueError(f"missing runs for {[r.label for r in missing]}")

    def primary(r: SolveResult) -> float:
        if metric == "pace":
            return pace_lb(r)
        if metric == "time":
            return r.wall_time
        if metric == "gap":
            return result_gap(r)
        if metric == "nodes":
            return float(r.nodes_explored)
        raise ValueError(f"unknown metric {metric!r}")

    def key(rule: RuleId):
        r = results[rule]
        return (primary(r), not r.solved, r.wall_time, result_gap(r), ALL_RULES.index(rule))

    return min(ALL_RULES, key=key)
