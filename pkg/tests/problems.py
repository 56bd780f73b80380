"""Small hand-written problems shared by the tests."""
from polybranch.poly import Multiset, POProblem, Polynomial


def M(*items):
    return Multiset(items)


def poly(terms):
    """``{(i, j, ...): coef}`` with 0-based variable indices."""
    return Polynomial([(float(c), Multiset(k)) for k, c in terms.items()])


def lin(coefs):
    return Polynomial([(float(c), Multiset((j,))) for j, c in enumerate(coefs) if c])


def P1():
    """min x1*x2 s.t. x1 + x2 >= 1 on [0,1]^2 (optimum 0)."""
    return POProblem(2, poly({(0, 1): 1}), ineq_constraints=[(lin([1, 1]), 1)], lower=(0, 0), upper=(1, 1), name="P1")


def P2():
    """min -x1*x2 s.t. x1 + x2 <= 1 on [0,1]^2 (optimum -0.25 at (0.5, 0.5))."""
    return POProblem(
        2, poly({(0, 1): -1}), ineq_constraints=[(lin([-1, -1]), -1)], lower=(0, 0), upper=(1, 1), name="P2"
    )


def star():
    """Objective x1*x2 + x1*x3 + x1*x4."""
    return POProblem(4, poly({(0, 1): 1, (0, 2): 1, (0, 3): 1}), lower=(0,) * 4, upper=(1,) * 4, name="star")
