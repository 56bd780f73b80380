import io
import math

import numpy as np
import pytest

from polybranch.bench.generator import gen_instance
from polybranch.engine import (
    BranchError,
    EngineConfig,
    Incumbent,
    RulePolicy,
    branch,
    branch_point,
    gap,
    node_kpi,
    read_trace,
    solve,
    update_incumbent,
    write_trace,
)
from polybranch.experts import BRulePolicy, BVarPolicy
from polybranch.rlt import NodeBounds
from polybranch.rules import ALL_RULES, RuleId

from .oracles import grid_best_feasible
from .problems import P1, P2

UNIT = NodeBounds((0.0, 0.0), (1.0, 1.0), (0.0, 0.0), (1.0, 1.0))


def regression_set():
    """20 generated problems with |N| <= 5 and degree <= 3."""
    out = []
    for k in range(20):
        n = 2 + k % 4
        d = 2 + (k // 4) % 2
        out.append(gen_instance(n, d, 0.5 + 0.1 * (k % 5), 100 + k))
    return out


def test_solve_p1_at_root():
    r = solve(P1(), EngineConfig())
    assert r.status == "optimal"
    assert r.best_lb == r.best_ub == 0.0
    assert r.nodes_explored == 1
    assert grid_best_feasible(P1())[0] == 0.0


def test_solve_p2():
    r = solve(P2(), EngineConfig())
    assert r.status == "optimal"
    assert -0.25 - 1e-3 <= r.best_ub <= -0.25 + 1e-3
    assert grid_best_feasible(P2())[0] == pytest.approx(-0.25)


def test_node_limit_one_on_p2():
    r = solve(P2(), EngineConfig(node_limit=1))
    assert r.status == "node-limit"
    assert r.best_lb == pytest.approx(-0.5)
    assert r.nodes_explored == 1


def test_branch_examples():
    left, right = branch(UNIT, 0, 0.5)
    assert (left.lower, left.upper) == ((0, 0), (0.5, 1))
    assert (right.lower, right.upper) == ((0.5, 0), (1, 1))
    left, right = branch(UNIT, 1, 0.25)
    assert (left.lower, left.upper) == ((0, 0), (1, 0.25))
    assert (right.lower, right.upper) == ((0, 0.25), (1, 1))
    with pytest.raises(BranchError):
        branch(UNIT, 0, 1.0)


def test_branch_point_examples():
    assert branch_point(UNIT, np.array([0.5, 0]), 0, 0.1) == 0.5
    assert branch_point(UNIT, np.array([1.0, 0]), 0, 0.1) == pytest.approx(0.9)
    assert branch_point(UNIT, np.array([0.02, 0]), 0, 0.1) == pytest.approx(0.1)
    assert branch_point(UNIT, None, 0, 0.1) == 0.5


def test_node_kpi_examples():
    assert node_kpi(-0.5, -1 / 3, -1 / 3) == pytest.approx(1 / 6)
    assert node_kpi(0, 0, 0) == 0
    assert node_kpi(1, math.inf, 1.2) == pytest.approx(0.2)
    assert node_kpi(1, math.inf, math.inf) == math.inf


def test_gap_examples():
    a, r = gap(-0.26, -0.25)
    assert a == pytest.approx(0.01) and r == pytest.approx(0.04)
    assert gap(1.0, 1.0) == (0.0, 0.0)
    assert gap(0.0, math.inf) == (math.inf, math.inf)


def test_update_incumbent_examples():
    st = Incumbent()
    assert update_incumbent(st, P1(), np.array([1.0, 0.0]), 1e-6)
    assert st.value == 0.0
    assert not update_incumbent(st, P1(), np.array([0.2, 0.2]), 1e-6)
    assert not update_incumbent(st, P1(), np.array([1.0, 1.0]), 1e-6)
    assert st.value == 0.0 and list(st.point) == [1.0, 0.0]


def test_config_validation():
    with pytest.raises(ValueError):
        EngineConfig(rel_gap_tol=0)
    with pytest.raises(ValueError):
        EngineConfig(alpha=0.5)
    with pytest.raises(ValueError):
        EngineConfig(deterministic=True)


@pytest.mark.parametrize("p", regression_set(), ids=lambda p: p.name)
def test_regression_set_converges(p):
    r = solve(p, EngineConfig(time_limit=None))
    assert r.status == "optimal"
    assert r.best_lb <= r.best_ub + 1e-9
    lbs = [lb for _, lb in r.lb_trace]
    assert lbs == sorted(lbs)
    for d in r.node_log:
        assert min(d.child_lbs) >= d.parent_lb - 1e-9
    assert r.main_lps == r.nodes_explored


@pytest.mark.parametrize("p", regression_set()[:8], ids=lambda p: p.name)
def test_policies_agree_on_optimum(p):
    policies = [RulePolicy(r) for r in ALL_RULES] + [BVarPolicy(RuleId.RANGE_REL), BRulePolicy(RuleId.DUAL)]
    cfg = EngineConfig(time_limit=None)
    ubs = []
    for pol in policies:
        r = solve(p, EngineConfig(time_limit=None, policy=pol))
        assert r.status == "optimal"
        ubs.append(r.best_ub)
    tol = max(cfg.abs_gap_tol, cfg.rel_gap_tol * max(abs(u) for u in ubs)) + 1e-9
    assert max(ubs) - min(ubs) <= tol


def test_probe_lps_not_counted_as_nodes():
    p = regression_set()[5]
    r = solve(p, EngineConfig(node_limit=40, deterministic=True, policy=BVarPolicy()))
    assert r.probe_lps > 0
    assert r.main_lps == r.nodes_explored
    assert r.nodes_explored == 1 + 2 * len(r.node_log)


def test_deterministic_mode_is_reproducible():
    p = regression_set()[7]
    cfg = EngineConfig(node_limit=30, deterministic=True)
    a, b = solve(p, cfg), solve(p, cfg)
    assert a.lb_trace == b.lb_trace
    assert [d.record() for d in a.node_log] == [d.record() for d in b.node_log]
    assert a.wall_time == float(a.nodes_explored)


def test_trace_round_trip():
    r = solve(P2(), EngineConfig())
    buf = io.StringIO()
    write_trace(r, buf)
    nodes, trace = read_trace(buf.getvalue().splitlines())
    assert len(nodes) == len(r.node_log)
    assert trace == [tuple(t) for t in r.lb_trace]
    assert nodes[0]["parent"] is None and nodes[0]["id"] == 0


def test_invalid_problem_rejected():
    from polybranch.poly import POProblem

    bad = POProblem(1, P1().objective, lower=(2,), upper=(1,))
    with pytest.raises(ValueError):
        solve(bad)
