"""The fixed 30-instance desk suite used by the acceptance checks."""
from __future__ import annotations

from pathlib import Path

from ..poly import POProblem
from .fileformat import write_problem
from .generator import gen_instance

# (num_vars, degree, density); seeds 0..4 each
DESK_SETTINGS = (
    (3, 2, 1.0),
    (3, 3, 0.5),
    (4, 2, 1.0),
    (5, 3, 0.6),
    (6, 2, 1.0),
    (7, 3, 0.3),
)
DESK_SEEDS = range(5)

COMPARISON = ("dual", "range", "eigen", "dual_rel", "range_rel", "eigen_rel", "orule_s", "brule_d_opt", "bvar_d_opt")


def desk_suite() -> list[POProblem]:
    return [gen_instance(n, d, dens, seed) for n, d, dens in DESK_SETTINGS for seed in DESK_SEEDS]


def write_suite(directory) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for p in desk_suite():
        path = directory / f"{p.name}.pop"
        path.write_text(write_problem(p), encoding="utf-8")
        paths.append(path)
    return paths
