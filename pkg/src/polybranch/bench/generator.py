"""Seeded random polynomial programs on the unit box."""
from __future__ import annotations

from itertools import combinations_with_replacement

import numpy as np

from ..poly import Multiset, POProblem, Polynomial

MAX_DRAWS = 16


def candidate_supports(num_vars: int, degree: int) -> list[Multiset]:
    """Every support of degree 1..degree, in generation order."""
    return [Multiset(c) for d in range(1, degree + 1) for c in combinations_with_replacement(range(num_vars), d)]


def gen_instance(num_vars: int, degree: int, density: float, seed: int, name: str | None = None) -> POProblem:
    """Random objective over ``[0, 1]^n`` with the single constraint ``sum x >= n/4``.

    Each support is kept with probability ``density`` and given a coefficient
    drawn uniformly from ``{-10..-1, 1..10}``.  Empty draws are repeated; after
    ``MAX_DRAWS`` empty draws a single uniformly chosen support is used.
    """
    if num_vars < 2 or degree < 2:
        raise ValueError("need num_vars >= 2 and degree >= 2")
    if not 0 < density <= 1:
        raise ValueError("density must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    supports = candidate_supports(num_vars, degree)
    coef_pool = np.array([c for c in range(-10, 11) if c != 0], dtype=float)
    for _ in range(MAX_DRAWS):
        keep = rng.random(len(supports)) < density
        coefs = rng.choice(coef_pool, size=len(supports))
        if keep.any():
            terms = [(float(c), s) for c, s, k in zip(coefs, supports, keep) if k]
            break
    else:
        k = int(rng.integers(len(supports)))
        terms = [(float(rng.choice(coef_pool)), supports[k])]
    lhs = Polynomial([(1.0, Multiset((j,))) for j in range(num_vars)])
    return POProblem(
        num_vars=num_vars,
        objective=Polynomial(terms),
        ineq_constraints=((lhs, num_vars / 4.0),),
        lower=(0.0,) * num_vars,
        upper=(1.0,) * num_vars,
        name=name or f"rand_n{num_vars}_d{degree}_p{density:g}_s{seed}",
    )
