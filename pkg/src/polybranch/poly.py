"""Multisets, monomials, polynomials and box-constrained polynomial programs.

Variables are indexed from 0.  A monomial's support is a :class:`Multiset` of
variable indices, e.g. ``x0 * x1**2 * x3`` has support ``{0, 1, 1, 3}``.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import total_ordering
from typing import Iterable, Mapping, Sequence

import numpy as np

DEFAULT_FEASIBILITY_TOL = 1e-6


@total_ordering
class Multiset:
    """Canonical multiset of variable indices.

    Stored as a sorted tuple of indices with repetition; :attr:`runs` gives the
    run-length form ``((index, multiplicity), ...)``.  Ordering is
    lexicographic on the runs.
    """

    __slots__ = ("_items", "_hash")

    def __init__(self, items: Iterable[int] = ()):
        items = tuple(sorted(int(i) for i in items))
        if items and items[0] < 0:
            raise ValueError(f"negative variable index {items[0]}")
        self._items = items
        self._hash = hash(items)

    @classmethod
    def from_runs(cls, runs: Iterable[tuple[int, int]]) -> "Multiset":
        items = []
        for idx, mult in runs:
            if mult < 1:
                raise ValueError(f"multiplicity must be >= 1, got {mult}")
            items.extend([idx] * mult)
        return cls(items)

    @property
    def items(self) -> tuple[int, ...]:
        return self._items

    @property
    def runs(self) -> tuple[tuple[int, int], ...]:
        out: list[tuple[int, int]] = []
        for i in self._items:
            if out and out[-1][0] == i:
                out[-1] = (i, out[-1][1] + 1)
            else:
                out.append((i, 1))
        return tuple(out)

    @property
    def degree(self) -> int:
        return len(self._items)

    def distinct(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.runs)

    def multiplicity(self, j: int) -> int:
        return self._items.count(j)

    def union(self, other: "Multiset") -> "Multiset":
        return Multiset(self._items + other._items)

    __add__ = union

    def remove(self, j: int) -> "Multiset":
        """Multiset with one copy of ``j`` removed."""
        items = list(self._items)
        items.remove(j)
        return Multiset(items)

    def submultisets(self) -> list["Multiset"]:
        """All sub-multisets (including empty and self), in canonical order."""
        out = [()]
        for idx, mult in self.runs:
            out = [s + (idx,) * k for s in out for k in range(mult + 1)]
        return sorted(Multiset(s) for s in out)

    def __iter__(self):
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def __eq__(self, other):
        return isinstance(other, Multiset) and self._items == other._items

    def __lt__(self, other: "Multiset"):
        return self.runs < other.runs

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return "{" + ",".join(map(str, self._items)) + "}"


def multiset_union(j1: Multiset, j2: Multiset) -> Multiset:
    return j1.union(j2)


@dataclass(frozen=True)
class Monomial:
    coefficient: float
    support: Multiset

    def __post_init__(self):
        if not math.isfinite(self.coefficient) or self.coefficient == 0.0:
            raise ValueError(f"monomial coefficient must be finite and nonzero, got {self.coefficient}")

    @property
    def degree(self) -> int:
        return self.support.degree


def monomial_eval(m: Monomial, x: Sequence[float]) -> float:
    val = float(m.coefficient)
    for j in m.support:
        if j >= len(x):
            raise ValueError(f"point has {len(x)} entries but monomial uses x{j}")
        val *= x[j]
    return val


class Polynomial:
    """Sparse polynomial with unique supports and no zero coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Iterable[Monomial | tuple[float, Multiset]] = ()):
        acc: dict[Multiset, float] = {}
        for t in terms:
            coef, supp = (t.coefficient, t.support) if isinstance(t, Monomial) else t
            if not isinstance(supp, Multiset):
                supp = Multiset(supp)
            acc[supp] = acc.get(supp, 0.0) + float(coef)
        self.terms: tuple[Monomial, ...] = tuple(
            Monomial(c, s) for s, c in sorted(acc.items(), key=lambda kv: kv[0]) if c != 0.0
        )

    @classmethod
    def from_dict(cls, coeffs: Mapping[Multiset, float]) -> "Polynomial":
        return cls((c, s) for s, c in coeffs.items())

    def as_dict(self) -> dict[Multiset, float]:
        return {t.support: t.coefficient for t in self.terms}

    @property
    def degree(self) -> int:
        return max((t.degree for t in self.terms), default=0)

    def variables(self) -> set[int]:
        return {j for t in self.terms for j in t.support}

    def scale(self, a: float) -> "Polynomial":
        return Polynomial((a * t.coefficient, t.support) for t in self.terms)

    def __neg__(self):
        return self.scale(-1.0)

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self.terms == other.terms

    def __hash__(self):
        return hash(self.terms)

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        return f"Polynomial({[(t.coefficient, t.support) for t in self.terms]})"


def poly_eval(p: Polynomial, x: Sequence[float]) -> float:
    return sum(monomial_eval(t, x) for t in p.terms)


@dataclass(frozen=True)
class POProblem:
    """``min objective(x)`` s.t. ``g(x) >= rhs`` (ineq), ``h(x) = rhs`` (eq), ``lower <= x <= upper``."""

    num_vars: int
    objective: Polynomial
    ineq_constraints: tuple[tuple[Polynomial, float], ...] = ()
    eq_constraints: tuple[tuple[Polynomial, float], ...] = ()
    lower: tuple[float, ...] = ()
    upper: tuple[float, ...] = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "ineq_constraints", tuple((p, float(b)) for p, b in self.ineq_constraints))
        object.__setattr__(self, "eq_constraints", tuple((p, float(b)) for p, b in self.eq_constraints))
        object.__setattr__(self, "lower", tuple(float(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(float(v) for v in self.upper))

    def polynomials(self) -> list[Polynomial]:
        """Objective followed by every constraint body."""
        return [self.objective] + [p for p, _ in self.ineq_constraints] + [p for p, _ in self.eq_constraints]

    @property
    def degree(self) -> int:
        return max(p.degree for p in self.polynomials())


@dataclass
class ValidationReport:
    problems: list[str] = field(default_factory=list)

    def __bool__(self):
        return not self.problems

    @property
    def ok(self) -> bool:
        return not self.problems


def problem_validate(p: POProblem) -> ValidationReport:
    report = ValidationReport()
    n = p.num_vars
    if n < 1:
        report.problems.append(f"num_vars must be >= 1, got {n}")
    if len(p.lower) != n or len(p.upper) != n:
        report.problems.append(f"bound vectors have lengths {len(p.lower)}/{len(p.upper)}, expected {n}")
    else:
        for j, (lo, up) in enumerate(zip(p.lower, p.upper)):
            if not (math.isfinite(lo) and math.isfinite(up)):
                report.problems.append(f"non-finite bound at variable {j}")
            elif lo < 0:
                report.problems.append(f"negative lower bound at variable {j}")
            elif lo > up:
                report.problems.append(f"bound inversion at variable {j}")
    labels = ["objective"] + [f"ineq {r}" for r in range(len(p.ineq_constraints))] + [
        f"eq {r}" for r in range(len(p.eq_constraints))
    ]
    for label, poly in zip(labels, p.polynomials()):
        bad = sorted(j for j in poly.variables() if j >= n)
        if bad:
            report.problems.append(f"index out of range in {label}: x{bad[0]} with {n} variables")
    for _, rhs in p.ineq_constraints + p.eq_constraints:
        if not math.isfinite(rhs):
            report.problems.append("non-finite constraint right-hand side")
            break
    if p.degree < 1:
        report.problems.append("problem degree must be >= 1")
    return report


def point_feasible(p: POProblem, x: Sequence[float], tol: float = DEFAULT_FEASIBILITY_TOL) -> bool:
    if len(x) != p.num_vars:
        raise ValueError(f"point has {len(x)} entries, problem has {p.num_vars} variables")
    if tol < 0:
        raise ValueError("tol must be >= 0")
    x = np.asarray(x, dtype=float)
    if np.any(x < np.asarray(p.lower) - tol) or np.any(x > np.asarray(p.upper) + tol):
        return False
    for poly, rhs in p.ineq_constraints:
        if poly_eval(poly, x) < rhs - tol:
            return False
    for poly, rhs in p.eq_constraints:
        if abs(poly_eval(poly, x) - rhs) > tol:
            return False
    return True


def support_counts(p: POProblem) -> Counter:
    """How many of the problem's polynomials contain each support of degree >= 2."""
    c: Counter = Counter()
    for poly in p.polynomials():
        for t in poly.terms:
            if t.degree >= 2:
                c[t.support] += 1
    return c
