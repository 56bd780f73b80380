"""RLT linear relaxation of a polynomial program over a box.

Every monomial ``x_J`` of degree >= 2 is replaced by an LP column ``X_J``.
The relaxation is tightened with bound-factor rows, the linearised products
``prod_{j in J1} (x_j - l_j) * prod_{j in J2} (u_j - x_j) >= 0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from .lp import GE, EQ, LPModel, LPRow, RowTag
from .poly import Multiset, POProblem, Polynomial


class MissingColumnError(KeyError):
    pass


class DegreeOverflowError(ValueError):
    pass


def collect_monomials(p: POProblem) -> list[Multiset]:
    """Distinct supports of degree >= 2 appearing anywhere in the problem, sorted."""
    found = {t.support for poly in p.polynomials() for t in poly.terms if t.degree >= 2}
    return sorted(found)


def monomial_closure(monomials: Sequence[Multiset]) -> list[Multiset]:
    """Every sub-multiset of degree >= 2 of the given monomials, sorted."""
    out = set()
    for m in monomials:
        out.update(s for s in m.submultisets() if s.degree >= 2)
    return sorted(out)


class RLTIndex:
    """Column map: variable ``j`` is column ``j``; closure multisets follow in
    sorted order."""

    def __init__(self, num_vars: int, monomials: Sequence[Multiset]):
        self.num_vars = num_vars
        self.problem_monomials: tuple[Multiset, ...] = tuple(sorted(set(monomials)))
        self.universe: tuple[Multiset, ...] = tuple(monomial_closure(self.problem_monomials))
        self.map: dict[Multiset, int] = {J: num_vars + k for k, J in enumerate(self.universe)}
        self.degree = max((J.degree for J in self.universe), default=1)
        self._splits: list[tuple[Multiset, Multiset]] | None = None

    @classmethod
    def for_problem(cls, p: POProblem) -> "RLTIndex":
        return cls(p.num_vars, collect_monomials(p))

    @property
    def num_cols(self) -> int:
        return self.num_vars + len(self.universe)

    def col(self, J: Multiset) -> int:
        if J.degree == 1:
            j = J.items[0]
            if j >= self.num_vars:
                raise MissingColumnError(J)
            return j
        try:
            return self.map[J]
        except KeyError:
            raise MissingColumnError(J) from None

    def __contains__(self, J: Multiset) -> bool:
        return (J.degree == 1 and J.items[0] < self.num_vars) or J in self.map

    def splits(self) -> list[tuple[Multiset, Multiset]]:
        """All ``(J1, J2)`` with ``J1 + J2`` in the closure."""
        if self._splits is None:
            out = []
            for J in self.universe:
                for J1 in J.submultisets():
                    J2 = Multiset(_difference(J.items, J1.items))
                    out.append((J1, J2))
            self._splits = out
        return self._splits

    def value(self, J: Multiset, primal: np.ndarray) -> float:
        """Relaxation value of ``X_J`` (``x_j`` for degree 1, 1 for the empty set)."""
        if J.degree == 0:
            return 1.0
        return float(primal[self.col(J)])


def _difference(items: tuple[int, ...], sub: tuple[int, ...]) -> list[int]:
    rest = list(items)
    for i in sub:
        rest.remove(i)
    return rest


@dataclass(frozen=True)
class NodeBounds:
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    root_lower: tuple[float, ...]
    root_upper: tuple[float, ...]

    @classmethod
    def root(cls, p: POProblem) -> "NodeBounds":
        return cls(p.lower, p.upper, p.lower, p.upper)

    def replace(self, j: int, lower: float | None = None, upper: float | None = None) -> "NodeBounds":
        lo, up = list(self.lower), list(self.upper)
        if lower is not None:
            lo[j] = float(lower)
        if upper is not None:
            up[j] = float(upper)
        return NodeBounds(tuple(lo), tuple(up), self.root_lower, self.root_upper)

    def width(self, j: int) -> float:
        return self.upper[j] - self.lower[j]

    def check(self) -> None:
        for j in range(len(self.lower)):
            if not (self.root_lower[j] <= self.lower[j] <= self.upper[j] <= self.root_upper[j]):
                raise ValueError(f"node bounds not nested at variable {j}")


def linearize(p: Polynomial, idx: RLTIndex) -> tuple[dict[int, float], float]:
    """Replace monomials by columns.  Returns ``(coefficients by column, constant)``."""
    row: dict[int, float] = {}
    offset = 0.0
    for t in p.terms:
        if t.degree == 0:
            offset += t.coefficient
        else:
            c = idx.col(t.support)
            row[c] = row.get(c, 0.0) + t.coefficient
    return row, offset


def expand_bound_factor(J1: Multiset, J2: Multiset, lower: Sequence[float], upper: Sequence[float]) -> dict[Multiset, float]:
    """Symbolic expansion of ``prod_{J1} (x_j - l_j) * prod_{J2} (u_j - x_j)``."""
    # each factor is (constant, coefficient of x_j)
    factors = [(j, -lower[j], 1.0) for j in J1] + [(j, upper[j], -1.0) for j in J2]
    out: dict[Multiset, float] = {}
    for pick in product((False, True), repeat=len(factors)):
        coef = 1.0
        items = []
        for (j, const, lin), take_x in zip(factors, pick):
            if take_x:
                coef *= lin
                items.append(j)
            else:
                coef *= const
        if coef != 0.0:
            key = Multiset(items)
            out[key] = out.get(key, 0.0) + coef
    return out


def bound_factor_linearize(J1: Multiset, J2: Multiset, nb: NodeBounds, idx: RLTIndex) -> LPRow:
    if J1.degree + J2.degree > idx.degree:
        raise DegreeOverflowError(f"bound factor of degree {J1.degree + J2.degree} exceeds {idx.degree}")
    terms = expand_bound_factor(J1, J2, nb.lower, nb.upper)
    row: dict[int, float] = {}
    const = 0.0
    for J, coef in terms.items():
        if J.degree == 0:
            const += coef
        else:
            c = idx.col(J)
            row[c] = row.get(c, 0.0) + coef
    cols = tuple(sorted(c for c, v in row.items() if v != 0.0))
    return LPRow(cols, tuple(row[c] for c in cols), GE, 0.0 - const, RowTag("bound-factor", (J1, J2)))


def column_bounds(nb: NodeBounds, idx: RLTIndex) -> tuple[np.ndarray, np.ndarray]:
    """Interval bounds ``[prod l, prod u]`` for every column (bounds are >= 0)."""
    lo = np.empty(idx.num_cols)
    up = np.empty(idx.num_cols)
    lo[: idx.num_vars] = nb.lower
    up[: idx.num_vars] = nb.upper
    for J, c in idx.map.items():
        lo[c] = np.prod([nb.lower[j] for j in J])
        up[c] = np.prod([nb.upper[j] for j in J])
    return lo, up


def _row(coeffs: dict[int, float], sense: str, rhs: float, tag: RowTag) -> LPRow:
    cols = tuple(sorted(c for c, v in coeffs.items() if v != 0.0))
    return LPRow(cols, tuple(coeffs[c] for c in cols), sense, rhs, tag)


def build_rlt_lp(p: POProblem, nb: NodeBounds, idx: RLTIndex | None = None) -> tuple[LPModel, RLTIndex]:
    """RLT relaxation of ``p`` over the node box; its optimum bounds ``p`` from below there."""
    if idx is None:
        idx = RLTIndex.for_problem(p)
    obj, offset = linearize(p.objective, idx)
    rows = []
    for r, (poly, rhs) in enumerate(p.ineq_constraints):
        coeffs, const = linearize(poly, idx)
        rows.append(_row(coeffs, GE, rhs - const, RowTag("original-ineq", r)))
    for r, (poly, rhs) in enumerate(p.eq_constraints):
        coeffs, const = linearize(poly, idx)
        rows.append(_row(coeffs, EQ, rhs - const, RowTag("original-eq", len(p.ineq_constraints) + r)))
    for J1, J2 in idx.splits():
        rows.append(bound_factor_linearize(J1, J2, nb, idx))
    lo, up = column_bounds(nb, idx)
    model = LPModel(idx.num_cols, obj, rows, lo, up, objective_offset=offset)
    return model, idx


def rlt_violation(j: int, J: Multiset, primal: np.ndarray, idx: RLTIndex) -> float:
    """``|X_{J+j} - x_j * X_J|`` at a relaxation solution."""
    full = J.union(Multiset((j,)))
    return abs(idx.value(full, primal) - float(primal[j]) * idx.value(J, primal))
