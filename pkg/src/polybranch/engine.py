"""Spatial branch-and-bound over RLT relaxations.

Nodes are processed best-bound first.  A branching policy picks the variable
at each node; the engine splits the box at a guarded relaxation value, solves
both children and records the lower-bound improvement (KPI) of the decision.
"""
from __future__ import annotations

import heapq
import json
import logging
import math
import time
from dataclasses import dataclass, field
from typing import IO, Any, Iterable

import numpy as np

from .lp import LPModel, LPNumericalError, LPSolution, lp_solve
from .poly import POProblem, point_feasible, poly_eval, problem_validate
from .rlt import NodeBounds, RLTIndex, build_rlt_lp

log = logging.getLogger(__name__)

INF = math.inf
LB_SLACK = 1e-9


@dataclass
class BBNode:
    id: int
    parent_id: int | None
    bounds: NodeBounds
    lb: float
    depth: int
    primal: np.ndarray | None = None
    model: LPModel | None = field(default=None, repr=False)
    solution: LPSolution | None = field(default=None, repr=False)

    @property
    def feasible(self) -> bool:
        return self.lb < INF

    def release(self) -> None:
        self.model = None
        self.solution = None


@dataclass
class NodeDecision:
    node_id: int
    variable: int
    rule: str
    point: float
    parent_lb: float
    child_lbs: tuple[float, float]
    kpi: float
    kpi_table: dict[int, float] | None = None
    rule_choices: dict[str, int] | None = None
    rule_kpis: dict[str, float] | None = None
    clock: float = 0.0

    def record(self) -> dict[str, Any]:
        return {
            "id": self.node_id,
            "rule": self.rule,
            "variable": self.variable,
            "point": self.point,
            "parent_lb": self.parent_lb,
            "child_lbs": list(self.child_lbs),
            "kpi": self.kpi,
            "kpi_table": None if self.kpi_table is None else {str(k): v for k, v in self.kpi_table.items()},
            "rule_choices": self.rule_choices,
            "wall_clock": self.clock,
        }


@dataclass
class SolveResult:
    status: str
    best_lb: float
    best_ub: float
    incumbent: np.ndarray | None
    nodes_explored: int
    wall_time: float
    lb_trace: list[tuple[float, float]]
    node_log: list[NodeDecision]
    root_lb: float = -INF
    probe_lps: int = 0
    main_lps: int = 0
    parents: dict[int, int | None] = field(default_factory=dict, repr=False)

    @property
    def solved(self) -> bool:
        return self.status == "optimal"

    def gap(self) -> tuple[float, float]:
        return gap(self.best_lb, self.best_ub)


@dataclass
class EngineConfig:
    time_limit: float | None = 600.0
    node_limit: int | None = None
    rel_gap_tol: float = 1e-3
    abs_gap_tol: float = 1e-3
    feasibility_tol: float = 1e-6
    alpha: float = 0.1
    policy: Any = None
    deterministic: bool = False

    def __post_init__(self):
        if min(self.rel_gap_tol, self.abs_gap_tol, self.feasibility_tol) <= 0:
            raise ValueError("tolerances must be > 0")
        if not 0 <= self.alpha < 0.5:
            raise ValueError("alpha must lie in [0, 0.5)")
        if self.deterministic and self.node_limit is None:
            raise ValueError("deterministic mode needs a node limit")


class BranchError(ValueError):
    pass


def branch(bounds: NodeBounds, j: int, point: float) -> tuple[NodeBounds, NodeBounds]:
    lo, up = bounds.lower[j], bounds.upper[j]
    if not lo < point < up:
        raise BranchError(f"branching point {point!r} outside ({lo!r}, {up!r}) for variable {j}")
    return bounds.replace(j, upper=point), bounds.replace(j, lower=point)


def branch_point(bounds: NodeBounds, primal: np.ndarray | None, j: int, alpha: float) -> float:
    lo, up = bounds.lower[j], bounds.upper[j]
    mid = 0.5 * (lo + up)
    if primal is None or not math.isfinite(primal[j]):
        return mid
    a, b = lo + alpha * (up - lo), up - alpha * (up - lo)
    if a > b:
        return mid
    return float(min(max(primal[j], a), b))


def node_kpi(parent_lb: float, left_lb: float, right_lb: float) -> float:
    """Improvement of the weaker child over the parent; infeasible children count as +inf."""
    return min(left_lb, right_lb) - parent_lb


def gap(lb: float, ub: float) -> tuple[float, float]:
    if ub == INF:
        return INF, INF
    if lb >= ub:
        return 0.0, 0.0
    a = ub - lb
    return a, a / max(abs(ub), 1e-6)


@dataclass
class Incumbent:
    value: float = INF
    point: np.ndarray | None = None


def update_incumbent(state: Incumbent, p: POProblem, x: np.ndarray, tol: float) -> bool:
    """Replace the incumbent if ``x`` is feasible and strictly better."""
    if x is None or not point_feasible(p, x, tol):
        return False
    val = poly_eval(p.objective, x)
    if val < state.value:
        state.value = val
        state.point = np.array(x, dtype=float)
        return True
    return False


@dataclass
class ChildProbe:
    bounds: NodeBounds
    lb: float
    model: LPModel
    solution: LPSolution


@dataclass
class Branching:
    """What a policy returns: the variable and, optionally, already solved children."""

    variable: int
    rule: str
    point: float | None = None
    children: tuple[ChildProbe, ChildProbe] | None = None
    kpi_table: dict[int, float] | None = None
    rule_choices: dict[str, int] | None = None
    rule_kpis: dict[str, float] | None = None


class SearchContext:
    """State shared between the engine and its branching policy during one solve."""

    def __init__(self, problem: POProblem, cfg: EngineConfig):
        from .rules import PseudoStats

        self.problem = problem
        self.cfg = cfg
        self.idx = RLTIndex.for_problem(problem)
        self.stats = PseudoStats(problem.num_vars)
        self._centrality = None
        self.main_lps = 0
        self.probe_lps = 0
        self.nodes_explored = 0
        self._start = time.monotonic()

    @property
    def centrality(self) -> np.ndarray:
        if self._centrality is None:
            from .rules import eigencentrality

            self._centrality = eigencentrality(self.problem)
        return self._centrality

    def clock(self) -> float:
        if self.cfg.deterministic:
            return float(self.nodes_explored)
        return time.monotonic() - self._start

    def relax(self, bounds: NodeBounds, parent_lb: float = -INF) -> ChildProbe:
        model, _ = build_rlt_lp(self.problem, bounds, self.idx)
        sol = lp_solve(model)
        if sol.status == "optimal":
            lb = max(sol.objective_value, parent_lb)
        elif sol.status == "infeasible":
            lb = INF
        else:
            raise LPNumericalError(f"relaxation returned status {sol.status}")
        return ChildProbe(bounds, lb, model, sol)

    def probe(self, node: BBNode, j: int, point: float | None = None) -> tuple[ChildProbe, ChildProbe, float]:
        """Solve both children of branching ``node`` on ``j`` (not counted as tree nodes)."""
        if point is None:
            point = branch_point(node.bounds, node.primal, j, self.cfg.alpha)
        left_b, right_b = branch(node.bounds, j, point)
        left = self.relax(left_b, node.lb)
        right = self.relax(right_b, node.lb)
        self.probe_lps += 2
        return left, right, node_kpi(node.lb, left.lb, right.lb)

    def point(self, node: BBNode, j: int) -> float:
        return branch_point(node.bounds, node.primal, j, self.cfg.alpha)


class RulePolicy:
    """Branch on the argmax of one fixed rule."""

    def __init__(self, rule):
        from .rules import RuleId

        self.rule = rule if isinstance(rule, RuleId) else RuleId.parse(rule)
        self.label = self.rule.label

    def decide(self, ctx: SearchContext, node: BBNode) -> Branching | None:
        from .rules import choose_with_rule

        cent = ctx.centrality if self.rule.base.value == "eigen" else None
        j = choose_with_rule(self.rule, node.bounds, node.model, node.solution, ctx.idx, ctx.stats, cent)
        if j is None:
            return None
        return Branching(j, self.label)


def solve(p: POProblem, cfg: EngineConfig | None = None) -> SolveResult:
    cfg = cfg or EngineConfig()
    report = problem_validate(p)
    if not report.ok:
        raise ValueError("invalid problem: " + "; ".join(report.problems))
    policy = cfg.policy
    if policy is None:
        from .rules import RuleId

        policy = RulePolicy(RuleId.RANGE_REL)
    return _Search(p, cfg, policy).run()


class _Search:
    def __init__(self, p: POProblem, cfg: EngineConfig, policy):
        self.p = p
        self.cfg = cfg
        self.policy = policy
        self.ctx = SearchContext(p, cfg)
        self.inc = Incumbent()
        self.heap: list[tuple[float, int, BBNode]] = []
        self.stalled: list[float] = []
        self.node_log: list[NodeDecision] = []
        self.parents: dict[int, int | None] = {}
        self.lb_trace: list[tuple[float, float]] = []
        self.next_id = 0

    def adopt(self, probe: ChildProbe, parent: BBNode | None) -> BBNode:
        node = BBNode(
            id=self.next_id,
            parent_id=None if parent is None else parent.id,
            bounds=probe.bounds,
            lb=probe.lb,
            depth=0 if parent is None else parent.depth + 1,
            primal=probe.solution.primal[: self.p.num_vars].copy() if probe.solution.optimal else None,
            model=probe.model,
            solution=probe.solution,
        )
        self.next_id += 1
        self.ctx.nodes_explored += 1
        self.ctx.main_lps += 1
        self.parents[node.id] = node.parent_id
        if node.primal is not None:
            update_incumbent(self.inc, self.p, node.primal, self.cfg.feasibility_tol)
        if node.lb < self.inc.value:
            heapq.heappush(self.heap, (node.lb, node.id, node))
        else:
            node.release()
        return node

    def global_lb(self) -> float:
        cands = list(self.stalled)
        if self.heap:
            cands.append(self.heap[0][0])
        if not cands:
            return self.inc.value
        return min(min(cands), self.inc.value)

    def trace(self) -> float:
        lb = self.global_lb()
        if not self.lb_trace or lb > self.lb_trace[-1][1]:
            self.lb_trace.append((self.ctx.clock(), lb))
        return lb

    def closed(self, lb: float) -> bool:
        a, r = gap(lb, self.inc.value)
        return a <= self.cfg.abs_gap_tol or r <= self.cfg.rel_gap_tol

    def run(self) -> SolveResult:
        cfg, ctx = self.cfg, self.ctx
        status = "optimal"
        root_lb = -INF
        try:
            root = self.adopt(ctx.relax(NodeBounds.root(self.p)), None)
            root_lb = root.lb
            while True:
                lb = self.trace()
                if not self.heap:
                    status = "optimal" if not self.stalled or self.closed(lb) else "failed"
                    break
                if self.closed(lb):
                    break
                if cfg.node_limit is not None and ctx.nodes_explored + 2 > cfg.node_limit:
                    status = "node-limit"
                    break
                if not cfg.deterministic and cfg.time_limit is not None and ctx.clock() >= cfg.time_limit:
                    status = "time-limit"
                    break
                _, _, node = heapq.heappop(self.heap)
                if node.lb >= self.inc.value:
                    node.release()
                    continue
                self.expand(node)
        except LPNumericalError as exc:
            log.warning("LP failure in %s: %s", self.p.name or "problem", exc)
            status = "failed"
        best_lb = self.global_lb() if status != "failed" else (self.lb_trace[-1][1] if self.lb_trace else -INF)
        if status == "optimal" and not self.heap and not self.stalled:
            best_lb = self.inc.value
        return SolveResult(
            status=status,
            best_lb=best_lb,
            best_ub=self.inc.value,
            incumbent=self.inc.point,
            nodes_explored=ctx.nodes_explored,
            wall_time=ctx.clock(),
            lb_trace=self.lb_trace,
            node_log=self.node_log,
            root_lb=root_lb,
            probe_lps=ctx.probe_lps,
            main_lps=ctx.main_lps,
            parents=self.parents,
        )

    def expand(self, node: BBNode) -> None:
        from .rules import reliability_update

        ctx = self.ctx
        decision = self.policy.decide(ctx, node)
        if decision is None:
            # nothing left to split: keep the bound, drop the node
            self.stalled.append(node.lb)
            node.release()
            return
        j = decision.variable
        if decision.children is not None:
            left, right = decision.children
            point = decision.point
        else:
            point = decision.point if decision.point is not None else ctx.point(node, j)
            lb_, rb_ = branch(node.bounds, j, point)
            left, right = ctx.relax(lb_, node.lb), ctx.relax(rb_, node.lb)
        kpi = node_kpi(node.lb, left.lb, right.lb)
        reliability_update(ctx.stats, j, kpi, node.lb)
        self.node_log.append(
            NodeDecision(
                node_id=node.id,
                variable=j,
                rule=decision.rule,
                point=point,
                parent_lb=node.lb,
                child_lbs=(left.lb, right.lb),
                kpi=kpi,
                kpi_table=decision.kpi_table,
                rule_choices=decision.rule_choices,
                rule_kpis=decision.rule_kpis,
                clock=ctx.clock(),
            )
        )
        node.release()
        self.adopt(left, node)
        self.adopt(right, node)


def write_trace(result: SolveResult, fh: IO[str]) -> None:
    """One JSON record per branched node, then one per lower-bound trace point."""
    for d in result.node_log:
        rec = d.record()
        rec["parent"] = result.parents.get(d.node_id)
        rec["type"] = "node"
        fh.write(json.dumps(rec, sort_keys=True) + "\n")
    for t, lb in result.lb_trace:
        fh.write(json.dumps({"type": "lb", "time": t, "lb": lb}, sort_keys=True) + "\n")


def read_trace(lines: Iterable[str]) -> tuple[list[dict], list[tuple[float, float]]]:
    nodes, trace = [], []
    for line in lines:
        line = line.strip()
        if not line:
            continue
        rec = json.loads(line)
        if rec.get("type") == "lb":
            trace.append((rec["time"], rec["lb"]))
        else:
            nodes.append(rec)
    return nodes, trace
