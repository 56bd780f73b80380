"""RLT spatial branch-and-bound for polynomial programs, with violation-weighted
branching rules, expert branching policies and a benchmark harness."""

from .engine import EngineConfig, RulePolicy, SolveResult, solve
from .experts import BRulePolicy, BVarPolicy, orule_select
from .poly import Monomial, Multiset, POProblem, Polynomial, point_feasible, poly_eval, problem_validate
from .rules import ALL_RULES, RuleId

__version__ = "0.1.0"

__all__ = [
    "ALL_RULES",
    "BRulePolicy",
    "BVarPolicy",
    "EngineConfig",
    "Monomial",
    "Multiset",
    "POProblem",
    "Polynomial",
    "RuleId",
    "RulePolicy",
    "SolveResult",
    "orule_select",
    "point_feasible",
    "poly_eval",
    "problem_validate",
    "solve",
]
