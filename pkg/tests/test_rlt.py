import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polybranch.bench.generator import gen_instance
from polybranch.lp import GE, lp_solve
from polybranch.poly import POProblem, poly_eval
from polybranch.rlt import (
    DegreeOverflowError,
    NodeBounds,
    RLTIndex,
    bound_factor_linearize,
    build_rlt_lp,
    collect_monomials,
    linearize,
    rlt_violation,
)

from .oracles import grid_best_feasible, vertex_enumeration_min
from .problems import M, P1, P2, lin, poly


def row_dict(row):
    return dict(zip(row.cols, row.vals))


def test_collect_monomials_examples():
    assert collect_monomials(P1()) == [M(0, 1)]
    p = POProblem(2, poly({(0, 0, 1): 1, (0,): 1}), lower=(0, 0), upper=(1, 1))
    assert collect_monomials(p) == [M(0, 0, 1)]
    q = POProblem(2, lin([1, -1]), ineq_constraints=[(lin([1, 1]), 1)], lower=(0, 0), upper=(1, 1))
    assert collect_monomials(q) == []


def test_linearize_examples():
    idx = RLTIndex(2, [M(0, 1), M(0, 0, 1)])
    row, const = linearize(poly({(0, 1): 1, (0,): -3}), idx)
    assert row == {idx.col(M(0, 1)): 1.0, 0: -3.0} and const == 0
    row, const = linearize(poly({(): 5}), idx)
    assert row == {} and const == 5
    row, _ = linearize(poly({(0, 0, 1): 1}), idx)
    assert row == {idx.col(M(0, 0, 1)): 1.0}


def test_closure_contains_submultisets():
    idx = RLTIndex(2, [M(0, 0, 1)])
    assert set(idx.universe) == {M(0, 0), M(0, 1), M(0, 0, 1)}
    # columns follow the sorted multiset order
    assert [idx.col(J) for J in idx.universe] == [2, 3, 4]


def test_bound_factor_examples():
    idx = RLTIndex(2, [M(0, 1)])
    nb = NodeBounds.root(P1())
    X = idx.col(M(0, 1))
    r = bound_factor_linearize(M(0), M(1), nb, idx)
    assert (r.sense, row_dict(r), r.rhs) == (GE, {0: 1.0, X: -1.0}, 0.0)
    r = bound_factor_linearize(M(0, 1), M(), nb, idx)
    assert (row_dict(r), r.rhs) == ({X: 1.0}, 0.0)
    r = bound_factor_linearize(M(), M(0, 1), nb, idx)
    assert (row_dict(r), r.rhs) == ({0: -1.0, 1: -1.0, X: 1.0}, -1.0)
    with pytest.raises(DegreeOverflowError):
        bound_factor_linearize(M(0, 0), M(1), nb, idx)


def test_p2_root_lp():
    model, idx = build_rlt_lp(P2(), NodeBounds.root(P2()))
    assert model.num_cols == 3
    assert sum(r.tag.kind == "bound-factor" for r in model.rows) == 4
    assert vertex_enumeration_min(model) == pytest.approx(-0.5, abs=1e-12)
    s = lp_solve(model)
    assert s.objective_value == pytest.approx(-0.5, abs=1e-9)


def test_p1_root_lp_is_exact():
    model, _ = build_rlt_lp(P1(), NodeBounds.root(P1()))
    s = lp_solve(model)
    assert s.objective_value == pytest.approx(0.0, abs=1e-9)
    assert vertex_enumeration_min(model) == pytest.approx(0.0, abs=1e-12)
    assert grid_best_feasible(P1())[0] == pytest.approx(0.0, abs=1e-12)


def test_linear_problem_is_exact():
    p = POProblem(2, lin([1, 2]), ineq_constraints=[(lin([1, 1]), 1)], lower=(0, 0), upper=(1, 1))
    model, idx = build_rlt_lp(p, NodeBounds.root(p))
    assert model.num_cols == 2 and not idx.universe
    assert lp_solve(model).objective_value == pytest.approx(1.0)


def test_rlt_violation_examples():
    idx = RLTIndex(2, [M(0, 1), M(0, 0)])
    x = np.zeros(idx.num_cols)
    x[[0, 1, idx.col(M(0, 1))]] = 0.5, 0.5, 0.5
    assert rlt_violation(0, M(1), x, idx) == pytest.approx(0.25)
    y = np.zeros(idx.num_cols)
    y[[0, 1]] = 0.3, 0.7
    y[idx.col(M(0, 1))] = 0.21
    y[idx.col(M(0, 0))] = 0.09
    assert rlt_violation(0, M(1), y, idx) == pytest.approx(0.0, abs=1e-15)
    z = np.zeros(idx.num_cols)
    z[0] = 1.0
    z[idx.col(M(0, 0))] = 0.3
    assert rlt_violation(0, M(0), z, idx) == pytest.approx(0.7)


def small_instances(count, start=0):
    out = []
    for k in range(count):
        n = 2 + k % 4
        d = 2 + k % 2
        out.append(gen_instance(n, d, 0.6, start + k))
    return out


@pytest.mark.parametrize("p", small_instances(8), ids=lambda p: p.name)
def test_root_bound_below_grid_oracle(p):
    model, _ = build_rlt_lp(p, NodeBounds.root(p))
    s = lp_solve(model)
    best, _ = grid_best_feasible(p, points_per_axis=11 if p.num_vars > 3 else 21)
    assert s.objective_value <= best + 1e-6


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.data())
def test_shrinking_never_decreases_bound(seed, data):
    p = gen_instance(3, 2 + seed % 2, 0.7, seed)
    root = NodeBounds.root(p)
    base = lp_solve(build_rlt_lp(p, root)[0])
    lo = [data.draw(st.floats(0, 0.5)) for _ in range(3)]
    up = [data.draw(st.floats(0.5, 1)) for _ in range(3)]
    shrunk = lp_solve(build_rlt_lp(p, NodeBounds(tuple(lo), tuple(up), p.lower, p.upper))[0])
    if shrunk.status == "infeasible":
        return
    assert shrunk.objective_value >= base.objective_value - 1e-8


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.lists(st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0]), min_size=3, max_size=3))
def test_singleton_box_is_exact(seed, pt):
    p = gen_instance(3, 3, 0.5, seed)
    nb = NodeBounds(tuple(pt), tuple(pt), p.lower, p.upper)
    s = lp_solve(build_rlt_lp(p, nb)[0])
    feasible = sum(pt) >= 3 / 4 - 1e-12
    if feasible:
        assert s.status == "optimal"
        assert s.objective_value == pytest.approx(poly_eval(p.objective, pt), abs=1e-7)
    else:
        assert s.status == "infeasible"


@settings(max_examples=60, deadline=None)
@given(
    st.integers(0, 10_000),
    st.lists(st.floats(0, 1), min_size=4, max_size=4),
    st.lists(st.floats(0, 1), min_size=4, max_size=4),
    st.lists(st.floats(0, 1), min_size=4, max_size=4),
)
def test_bound_factor_rows_hold_at_consistent_points(seed, a, b, t):
    p = gen_instance(4, 3, 0.5, seed)
    lo = tuple(min(u, v) for u, v in zip(a, b))
    up = tuple(max(u, v) for u, v in zip(a, b))
    x = [l + s * (u - l) for l, u, s in zip(lo, up, t)]
    nb = NodeBounds(lo, up, p.lower, p.upper)
    model, idx = build_rlt_lp(p, nb)
    X = np.array(x + [float(np.prod([x[j] for j in J])) for J in idx.universe])
    for row in model.rows:
        if row.tag.kind != "bound-factor":
            continue
        act = float(np.dot(row.vals, X[list(row.cols)]))
        assert act >= row.rhs - 1e-9 * max(1.0, sum(abs(v) for v in row.vals))
