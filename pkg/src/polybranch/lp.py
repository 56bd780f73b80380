"""Bounded linear programs, their solutions, and optimality certificates.

Solves go through HiGHS' dual simplex (``scipy.optimize.linprog``), which is
deterministic for identical input and returns row duals.  Duals follow the
minimisation convention: ``>=`` rows carry duals ``>= 0``, ``<=`` rows ``<= 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

GE, LE, EQ = ">=", "<=", "="
ITERATION_CAP = 50_000
CERT_TOL = 1e-8


class LPNumericalError(RuntimeError):
    """The LP backend could not certify an optimal basis."""


@dataclass(frozen=True)
class RowTag:
    """Where a row came from: ``original-ineq``/``original-eq`` carry a
    constraint index, ``bound-factor`` carries the ``(J1, J2)`` split."""

    kind: str
    source: Any = None

    def __post_init__(self):
        if self.kind not in ("original-ineq", "original-eq", "bound-factor", "other"):
            raise ValueError(f"unknown row kind {self.kind!r}")
        if self.kind == "bound-factor" and not (isinstance(self.source, tuple) and len(self.source) == 2):
            raise ValueError("bound-factor rows need a (J1, J2) source")


@dataclass(frozen=True)
class LPRow:
    cols: tuple[int, ...]
    vals: tuple[float, ...]
    sense: str
    rhs: float
    tag: RowTag = RowTag("other")

    def coefficient(self, col: int) -> float:
        try:
            return self.vals[self.cols.index(col)]
        except ValueError:
            return 0.0


@dataclass
class LPModel:
    num_cols: int
    objective: dict[int, float]
    rows: list[LPRow]
    col_lower: np.ndarray
    col_upper: np.ndarray
    objective_offset: float = 0.0

    def __post_init__(self):
        self.col_lower = np.asarray(self.col_lower, dtype=float)
        self.col_upper = np.asarray(self.col_upper, dtype=float)

    def validate(self) -> None:
        if self.col_lower.shape != (self.num_cols,) or self.col_upper.shape != (self.num_cols,):
            raise ValueError("column bound vectors must have num_cols entries")
        if not (np.all(np.isfinite(self.col_lower)) and np.all(np.isfinite(self.col_upper))):
            raise ValueError("all column bounds must be finite")
        if np.any(self.col_lower > self.col_upper):
            raise ValueError("column bound inversion")
        for col in self.objective:
            if not 0 <= col < self.num_cols:
                raise ValueError(f"objective column {col} out of range")
        for i, row in enumerate(self.rows):
            if row.sense not in (GE, LE, EQ):
                raise ValueError(f"row {i}: bad relation {row.sense!r}")
            if any(not 0 <= c < self.num_cols for c in row.cols):
                raise ValueError(f"row {i}: column index out of range")

    def cost_vector(self) -> np.ndarray:
        c = np.zeros(self.num_cols)
        for col, v in self.objective.items():
            c[col] += v
        return c

    def matrix(self) -> sp.csr_matrix:
        data, indices, indptr = [], [], [0]
        for row in self.rows:
            data.extend(row.vals)
            indices.extend(row.cols)
            indptr.append(len(data))
        return sp.csr_matrix(
            (np.asarray(data, dtype=float), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
            shape=(len(self.rows), self.num_cols),
        )

    def dump(self) -> str:
        """Line-based text form for diffing; not a stable format."""
        lines = [f"cols {self.num_cols}"]
        obj = " ".join(f"{v!r}*c{c}" for c, v in sorted(self.objective.items()))
        lines.append(f"min {obj} + {self.objective_offset!r}")
        for c in range(self.num_cols):
            lines.append(f"bound c{c} {float(self.col_lower[c])!r} {float(self.col_upper[c])!r}")
        for row in self.rows:
            body = " ".join(f"{v!r}*c{c}" for c, v in zip(row.cols, row.vals))
            lines.append(f"row [{row.tag.kind}:{row.tag.source}] {body} {row.sense} {row.rhs!r}")
        return "\n".join(lines) + "\n"


@dataclass
class LPSolution:
    status: str
    primal: np.ndarray = field(default_factory=lambda: np.zeros(0))
    objective_value: float = math.nan
    duals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def lp_solve(m: LPModel) -> LPSolution:
    m.validate()
    c = m.cost_vector()
    A = m.matrix()
    senses = [r.sense for r in m.rows]
    rhs = np.array([r.rhs for r in m.rows], dtype=float)
    ub_idx = [i for i, s in enumerate(senses) if s != EQ]
    eq_idx = [i for i, s in enumerate(senses) if s == EQ]
    flip = np.array([-1.0 if senses[i] == GE else 1.0 for i in ub_idx])

    kw: dict[str, Any] = {}
    if ub_idx:
        kw["A_ub"] = sp.diags(flip) @ A[ub_idx]
        kw["b_ub"] = flip * rhs[ub_idx]
    if eq_idx:
        kw["A_eq"] = A[eq_idx]
        kw["b_eq"] = rhs[eq_idx]
    res = linprog(
        c,
        bounds=np.column_stack([m.col_lower, m.col_upper]),
        method="highs-ds",
        options={
            "maxiter": ITERATION_CAP,
            "presolve": False,
            "primal_feasibility_tolerance": 1e-9,
            "dual_feasibility_tolerance": 1e-9,
        },
        **kw,
    )
    if res.status == 2:
        return LPSolution("infeasible", iterations=int(res.nit))
    if res.status == 3:
        return LPSolution("unbounded", iterations=int(res.nit))
    if res.status != 0:
        raise LPNumericalError(f"LP solve failed (status {res.status}): {res.message}")

    duals = np.zeros(len(m.rows))
    if ub_idx:
        # linprog marginals are d(obj)/d(b_ub) <= 0; undo the sign flip of >= rows
        duals[ub_idx] = flip * res.ineqlin.marginals
    if eq_idx:
        duals[eq_idx] = res.eqlin.marginals
    x = np.clip(res.x, m.col_lower, m.col_upper)
    return LPSolution(
        "optimal",
        primal=x,
        objective_value=float(c @ x + m.objective_offset),
        duals=duals,
        iterations=int(res.nit),
    )


@dataclass
class CertificateReport:
    primal_violations: list[str] = field(default_factory=list)
    dual_sign_violations: list[str] = field(default_factory=list)
    complementarity_violations: list[str] = field(default_factory=list)
    bound_dual_violations: list[str] = field(default_factory=list)
    objective_mismatch: str | None = None
    dual_objective: float = math.nan

    @property
    def ok(self) -> bool:
        return not (
            self.primal_violations
            or self.dual_sign_violations
            or self.complementarity_violations
            or self.bound_dual_violations
            or self.objective_mismatch
        )

    def failures(self) -> list[str]:
        out = self.primal_violations + self.dual_sign_violations + self.complementarity_violations
        out += self.bound_dual_violations
        if self.objective_mismatch:
            out.append(self.objective_mismatch)
        return out


def check_certificates(m: LPModel, s: LPSolution, tol: float = CERT_TOL) -> CertificateReport:
    """Verify primal feasibility, dual signs, complementary slackness and
    strong duality for an optimal solution.

    Column-bound duals are recovered from the reduced costs ``c - A^T y``.
    Row tolerances scale with ``max(1, |rhs|)``.
    """
    if s.status != "optimal":
        raise ValueError("certificates only exist for optimal solutions")
    rep = CertificateReport()
    x = np.asarray(s.primal, dtype=float)
    y = np.asarray(s.duals, dtype=float)
    A = m.matrix()
    act = A @ x if m.rows else np.zeros(0)
    c = m.cost_vector()

    for j in range(m.num_cols):
        if x[j] < m.col_lower[j] - tol * max(1.0, abs(m.col_lower[j])) or x[j] > m.col_upper[j] + tol * max(
            1.0, abs(m.col_upper[j])
        ):
            rep.primal_violations.append(f"column {j} outside bounds: {x[j]!r}")

    for i, row in enumerate(m.rows):
        scale = max(1.0, abs(row.rhs))
        slack = act[i] - row.rhs
        if row.sense == GE and slack < -tol * scale:
            rep.primal_violations.append(f"row {i} (>=) violated by {-slack:.3e}")
        elif row.sense == LE and slack > tol * scale:
            rep.primal_violations.append(f"row {i} (<=) violated by {slack:.3e}")
        elif row.sense == EQ and abs(slack) > tol * scale:
            rep.primal_violations.append(f"row {i} (=) violated by {abs(slack):.3e}")
        if row.sense == GE and y[i] < -tol:
            rep.dual_sign_violations.append(f"row {i} (>=) has dual {y[i]!r} < 0")
        elif row.sense == LE and y[i] > tol:
            rep.dual_sign_violations.append(f"row {i} (<=) has dual {y[i]!r} > 0")
        if row.sense != EQ and abs(y[i] * slack) > tol * scale:
            rep.complementarity_violations.append(f"row {i}: |dual*slack| = {abs(y[i] * slack):.3e}")

    d = c - (A.T @ y if m.rows else 0.0)
    bound_part = 0.0
    for j in range(m.num_cols):
        lo, up = m.col_lower[j], m.col_upper[j]
        width_tol = tol * max(1.0, abs(lo), abs(up))
        if d[j] > tol:
            if x[j] - lo > width_tol:
                rep.bound_dual_violations.append(f"column {j}: reduced cost {d[j]:.3e} > 0 off lower bound")
            bound_part += d[j] * lo
        elif d[j] < -tol:
            if up - x[j] > width_tol:
                rep.bound_dual_violations.append(f"column {j}: reduced cost {d[j]:.3e} < 0 off upper bound")
            bound_part += d[j] * up
        else:
            bound_part += d[j] * x[j]
    rhs = np.array([r.rhs for r in m.rows], dtype=float)
    dual_obj = float(y @ rhs) + bound_part + m.objective_offset if m.rows else bound_part + m.objective_offset
    primal_obj = float(c @ x) + m.objective_offset
    rep.dual_objective = dual_obj
    if abs(primal_obj - s.objective_value) > tol * max(1.0, abs(primal_obj)):
        rep.objective_mismatch = f"reported objective {s.objective_value!r} != c.x {primal_obj!r}"
    elif abs(primal_obj - dual_obj) > tol * max(1.0, abs(primal_obj)):
        rep.objective_mismatch = f"primal {primal_obj!r} != dual {dual_obj!r}"
    return rep


def dense_model(
    c: Sequence[float],
    A: np.ndarray,
    senses: Sequence[str],
    b: Sequence[float],
    lower: Sequence[float],
    upper: Sequence[float],
    offset: float = 0.0,
) -> LPModel:
    """Build an :class:`LPModel` from dense arrays (tests and small tools)."""
    A = np.atleast_2d(np.asarray(A, dtype=float)) if len(senses) else np.zeros((0, len(c)))
    rows = []
    for i, sense in enumerate(senses):
        nz = np.flatnonzero(A[i])
        rows.append(LPRow(tuple(int(k) for k in nz), tuple(float(A[i, k]) for k in nz), sense, float(b[i])))
    return LPModel(
        num_cols=len(c),
        objective={j: float(v) for j, v in enumerate(c) if v != 0},
        rows=rows,
        col_lower=np.asarray(lower, dtype=float),
        col_upper=np.asarray(upper, dtype=float),
        objective_offset=offset,
    )
