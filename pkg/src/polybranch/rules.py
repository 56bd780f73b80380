"""Violation-weighted branching rules.

Every rule scores variable ``j`` as

    theta_j = sum over problem monomials M containing j of  w(j, M - {j}) * |X_M - x_j X_{M - {j}}|

and differs only in the weight ``w``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .lp import LPModel, LPSolution
from .poly import POProblem
from .rlt import NodeBounds, RLTIndex, rlt_violation

WIDTH_FLOOR = 1e-8


class RuleId(enum.Enum):
    DUAL = "dual"
    RANGE = "range"
    EIGEN = "eigen"
    DUAL_REL = "dual_rel"
    RANGE_REL = "range_rel"
    EIGEN_REL = "eigen_rel"

    @property
    def base(self) -> "RuleId":
        return {RuleId.DUAL_REL: RuleId.DUAL, RuleId.RANGE_REL: RuleId.RANGE, RuleId.EIGEN_REL: RuleId.EIGEN}.get(
            self, self
        )

    @property
    def reliable(self) -> bool:
        return self.base is not self

    @property
    def label(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "RuleId":
        key = text.strip().lower().replace(" ", "_").replace("-", "_")
        for r in cls:
            if r.value == key:
                return r
        raise ValueError(f"unknown rule {text!r}; expected one of {[r.value for r in cls]}")


ALL_RULES: tuple[RuleId, ...] = tuple(RuleId)


# -- eigencentrality ---------------------------------------------------------

def cooccurrence_matrix(p: POProblem) -> np.ndarray:
    """Weighted variable graph: ``A[i, k]`` counts (polynomial, monomial) pairs
    whose monomial contains both ``i`` and ``k``."""
    n = p.num_vars
    A = np.zeros((n, n))
    for poly in p.polynomials():
        for t in poly.terms:
            vs = t.support.distinct()
            for a in range(len(vs)):
                for b in range(a + 1, len(vs)):
                    A[vs[a], vs[b]] += 1.0
                    A[vs[b], vs[a]] += 1.0
    return A


def eigencentrality(p: POProblem, tol: float = 1e-12, max_iter: int = 10_000) -> np.ndarray:
    A = cooccurrence_matrix(p)
    n = len(A)
    isolated = A.sum(axis=1) == 0
    if np.all(isolated):
        return np.full(n, 1.0 / math.sqrt(n))
    # power iteration on A + I: same eigenvectors, and the shift breaks the
    # +/- lambda tie of bipartite graphs such as stars
    v = np.where(isolated, 0.0, 1.0)
    v /= np.linalg.norm(v)
    for _ in range(max_iter):
        w = A @ v + v
        w /= np.linalg.norm(w)
        if np.max(np.abs(w - v)) < tol:
            v = w
            break
        v = w
    v[isolated] = 0.0
    v = np.abs(v)
    return v / np.linalg.norm(v)


# -- reliability -------------------------------------------------------------

@dataclass
class PseudoStats:
    """Per-variable history of observed (relative) lower-bound improvements."""

    num_vars: int
    eta: int = 4
    counts: np.ndarray = field(default=None)
    sums: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.counts is None:
            self.counts = np.zeros(self.num_vars, dtype=int)
        if self.sums is None:
            self.sums = np.zeros(self.num_vars)

    def multiplier(self, j: int) -> float:
        if self.counts[j] < self.eta:
            return 1.0
        return max(self.sums[j] / self.counts[j], 1e-3)

    def multipliers(self) -> np.ndarray:
        return np.array([self.multiplier(j) for j in range(self.num_vars)])

    def copy(self) -> "PseudoStats":
        return PseudoStats(self.num_vars, self.eta, self.counts.copy(), self.sums.copy())


def reliability_update(ps: PseudoStats, j: int, kpi: float, parent_lb: float) -> PseudoStats:
    """Record one branching on ``j``; infinite or huge KPIs count as 10."""
    ps.counts[j] += 1
    ps.sums[j] += min(kpi, 10.0) / max(1.0, abs(parent_lb))
    return ps


# -- scoring -----------------------------------------------------------------

def dual_column_weights(model: LPModel, sol: LPSolution) -> np.ndarray:
    """For every column, the sum of ``|dual|`` over rows with a nonzero coefficient on it."""
    A = model.matrix()
    A.data = np.ones_like(A.data)
    A.eliminate_zeros()
    return np.asarray(A.T @ np.abs(sol.duals)).ravel()


def violation_terms(idx: RLTIndex, primal: np.ndarray):
    """Yield ``(j, J, M, violation)`` for every problem monomial ``M`` and each distinct ``j`` in it."""
    for M in idx.problem_monomials:
        for j in M.distinct():
            J = M.remove(j)
            yield j, J, M, rlt_violation(j, J, primal, idx)


def rule_score(
    rule: RuleId,
    bounds: NodeBounds,
    model: LPModel,
    sol: LPSolution,
    idx: RLTIndex,
    stats: PseudoStats | None = None,
    centrality: np.ndarray | None = None,
) -> np.ndarray:
    n = idx.num_vars
    x = sol.primal
    base = rule.base
    if base is RuleId.DUAL:
        colw = dual_column_weights(model, sol)
    elif base is RuleId.EIGEN and centrality is None:
        raise ValueError("Eigen rules need a centrality vector")
    theta = np.zeros(n)
    for j, J, M, viol in violation_terms(idx, x):
        if viol == 0.0:
            continue
        if base is RuleId.DUAL:
            w = colw[idx.col(M)]
        elif base is RuleId.RANGE:
            root_w = bounds.root_upper[j] - bounds.root_lower[j]
            w = min(bounds.upper[j] - x[j], x[j] - bounds.lower[j]) / root_w if root_w > 0 else 0.0
            w = max(w, 0.0)
        else:
            w = centrality[j]
        theta[j] += w * viol
    if rule.reliable:
        if stats is None:
            raise ValueError("Rel rules need PseudoStats")
        theta *= stats.multipliers()
    widths = np.asarray(bounds.upper) - np.asarray(bounds.lower)
    theta[widths <= WIDTH_FLOOR] = 0.0
    return theta


class NoPositiveScore(ValueError):
    pass


def select_variable(scores: np.ndarray) -> int:
    scores = np.asarray(scores)
    if scores.size == 0 or not np.any(scores > 0):
        raise NoPositiveScore("no variable has a positive score")
    return int(np.argmax(scores))


def nonlinear_variables(idx: RLTIndex) -> list[int]:
    return sorted({j for M in idx.problem_monomials for j in M})


def widest_domain_variable(bounds: NodeBounds, candidates: list[int]) -> int | None:
    """Variable with the largest node-width relative to its root width (lowest index on ties)."""
    best, best_w = None, WIDTH_FLOOR
    for j in candidates:
        root_w = bounds.root_upper[j] - bounds.root_lower[j]
        width = bounds.upper[j] - bounds.lower[j]
        if width <= WIDTH_FLOOR or root_w <= 0:
            continue
        rel = width / root_w
        if best is None or rel > best_w:
            best, best_w = j, rel
    return best


def choose_with_rule(
    rule: RuleId,
    bounds: NodeBounds,
    model: LPModel,
    sol: LPSolution,
    idx: RLTIndex,
    stats: PseudoStats | None,
    centrality: np.ndarray | None,
) -> int | None:
    """Rule argmax, or the widest-domain nonlinear variable when every score is 0."""
    scores = rule_score(rule, bounds, model, sol, idx, stats, centrality)
    if np.any(scores > 0):
        return select_variable(scores)
    cands = nonlinear_variables(idx) or list(range(idx.num_vars))
    j = widest_domain_variable(bounds, cands)
    if j is None:
        j = widest_domain_variable(bounds, list(range(idx.num_vars)))
    return j


__all__ = [
    "ALL_RULES",
    "NoPositiveScore",
    "PseudoStats",
    "RuleId",
    "choose_with_rule",
    "cooccurrence_matrix",
    "eigencentrality",
    "reliability_update",
    "rule_score",
    "select_variable",
]
