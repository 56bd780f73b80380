import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polybranch.bench.generator import gen_instance
from polybranch.lp import LPSolution, lp_solve
from polybranch.poly import POProblem
from polybranch.rlt import NodeBounds, build_rlt_lp
from polybranch.rules import (
    ALL_RULES,
    NoPositiveScore,
    PseudoStats,
    RuleId,
    choose_with_rule,
    cooccurrence_matrix,
    dual_column_weights,
    eigencentrality,
    reliability_update,
    rule_score,
    select_variable,
)

from .problems import M, P2, lin, poly, star


def root(p, nb=None):
    nb = nb or NodeBounds.root(p)
    model, idx = build_rlt_lp(p, nb)
    return nb, model, lp_solve(model), idx


def scores(rule, p, nb=None, stats=None):
    nb, model, sol, idx = root(p, nb)
    return rule_score(rule, nb, model, sol, idx, stats or PseudoStats(p.num_vars), eigencentrality(p))


def dense_centrality(p):
    """Leading eigenvector of the adjacency matrix via a dense symmetric solve."""
    w, V = np.linalg.eigh(cooccurrence_matrix(p))
    v = np.abs(V[:, np.argmax(w)])
    return v / np.linalg.norm(v)


def test_rule_names():
    assert [r.label for r in ALL_RULES] == ["dual", "range", "eigen", "dual_rel", "range_rel", "eigen_rel"]
    assert RuleId.parse("Range-Rel") is RuleId.RANGE_REL
    assert RuleId.EIGEN_REL.base is RuleId.EIGEN and RuleId.EIGEN_REL.reliable
    with pytest.raises(ValueError):
        RuleId.parse("nope")


def test_eigencentrality_examples():
    assert eigencentrality(P2()) == pytest.approx([1 / math.sqrt(2)] * 2)
    linear = POProblem(3, lin([1, 1, 1]), lower=(0,) * 3, upper=(1,) * 3)
    assert eigencentrality(linear) == pytest.approx([1 / math.sqrt(3)] * 3)
    c = eigencentrality(star())
    assert c[0] > max(c[1:])
    assert c == pytest.approx(dense_centrality(star()), abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(3, 6))
def test_eigencentrality_matches_dense_oracle(seed, n):
    p = gen_instance(n, 2, 1.0, seed)
    c = eigencentrality(p)
    assert np.all(c >= 0)
    assert np.linalg.norm(c) == pytest.approx(1.0)
    assert c == pytest.approx(dense_centrality(p), abs=1e-7)


def test_eigencentrality_symmetric_under_duplicated_constraint():
    base = P2()
    dup = POProblem(2, base.objective, ineq_constraints=list(base.ineq_constraints) * 2 + [(poly({(0, 1): 2}), 0)],
                    lower=base.lower, upper=base.upper)
    c = eigencentrality(dup)
    assert c[0] == pytest.approx(c[1])


def test_range_score_on_p2_root():
    assert scores(RuleId.RANGE, P2()) == pytest.approx([0.125, 0.125])


def test_zero_violation_gives_zero_scores():
    # P2 on the box x1 in [0, 0]: McCormick is exact, X12 = 0 = x1 * x2
    p = P2()
    nb = NodeBounds((0.0, 0.0), (0.0, 1.0), p.lower, p.upper)
    for rule in ALL_RULES:
        assert np.all(scores(rule, p, nb) == 0)


def test_range_zero_at_lower_bound():
    # hand-made relaxation point: x1 sits on its lower bound, X12 = 0.3 is violated
    nb, model, sol, idx = root(P2())
    fake = LPSolution("optimal", np.array([0.0, 0.5, 0.3]), 0.0, sol.duals, 0)
    th = rule_score(RuleId.RANGE, nb, model, fake, idx)
    assert th[0] == 0.0
    assert th[1] == pytest.approx(0.5 * 0.3)


def test_select_variable_examples():
    assert select_variable([0.125, 0.125]) == 0
    assert select_variable([0.1, 0.9, 0.3]) == 1
    with pytest.raises(NoPositiveScore):
        select_variable([0.0, 0.0])


def test_reliability_examples():
    ps = reliability_update(PseudoStats(2), 0, 0.2, -0.5)
    assert ps.counts[0] == 1 and ps.sums[0] == pytest.approx(0.2)
    for _ in range(2):
        reliability_update(ps, 0, 0.2, -0.5)
    assert ps.multiplier(0) == 1.0
    ps = PseudoStats(1, counts=np.array([4]), sums=np.array([2.0]))
    assert ps.multiplier(0) == 0.5
    ps = PseudoStats(1, counts=np.array([4]), sums=np.array([0.0]))
    assert ps.multiplier(0) == 1e-3
    # large parent bounds scale the observation; infinite KPIs count as 10
    ps = reliability_update(PseudoStats(1), 0, math.inf, -20.0)
    assert ps.sums[0] == pytest.approx(0.5)


def test_rel_rule_scales_base_score():
    p = gen_instance(4, 2, 1.0, 3)
    stats = PseudoStats(4, counts=np.array([5, 0, 5, 5]), sums=np.array([1.0, 0.0, 2.5, 0.0]))
    for rule in (RuleId.DUAL_REL, RuleId.RANGE_REL, RuleId.EIGEN_REL):
        base = scores(rule.base, p)
        rel = scores(rule, p, stats=stats)
        assert rel == pytest.approx(base * np.array([0.2, 1.0, 0.5, 1e-3]))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(1e-3, 1e3))
def test_scaling_weights_keeps_argmax(seed, c):
    p = gen_instance(4, 2, 0.8, seed)
    nb, model, sol, idx = root(p)
    cent = eigencentrality(p)
    th = rule_score(RuleId.EIGEN, nb, model, sol, idx, None, cent)
    th_scaled = rule_score(RuleId.EIGEN, nb, model, sol, idx, None, cent * c)
    if np.any(th > 0):
        assert select_variable(th_scaled) == select_variable(th)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_dual_zero_when_touching_rows_have_zero_duals(seed):
    p = gen_instance(3, 2, 1.0, seed)
    nb, model, sol, idx = root(p)
    th = rule_score(RuleId.DUAL, nb, model, sol, idx)
    A = model.matrix().tocsc()
    for j in range(p.num_vars):
        touching = set()
        for Mo in idx.problem_monomials:
            if j in Mo:
                col = idx.col(Mo)
                touching.update(A.indices[A.indptr[col] : A.indptr[col + 1]].tolist())
        if all(sol.duals[r] == 0 for r in touching):
            assert th[j] == 0.0


def test_dual_column_weights_sum_abs_duals():
    nb, model, sol, idx = root(P2())
    w = dual_column_weights(model, sol)
    X = idx.col(M(0, 1))
    expected = sum(abs(sol.duals[r]) for r, row in enumerate(model.rows) if X in row.cols)
    assert w[X] == pytest.approx(expected)


def test_fallback_to_widest_domain():
    p = P2()
    nb = NodeBounds((0.0, 0.0), (0.0, 1.0), p.lower, p.upper)
    nb2, model, sol, idx = root(p, nb)
    assert choose_with_rule(RuleId.RANGE, nb2, model, sol, idx, None, None) == 1
    point = NodeBounds((0.5, 0.5), (0.5, 0.5), p.lower, p.upper)
    nb3, model, sol, idx = root(p, point)
    assert choose_with_rule(RuleId.RANGE, nb3, model, sol, idx, None, None) is None
