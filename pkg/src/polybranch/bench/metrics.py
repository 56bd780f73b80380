"""Benchmark metrics: pace, shifted geometric means, per-metric exclusions
and performance profiles."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

PACE_CAP = 1e7
GAP_SHIFT = 1e-3
TIME_FLOOR = 0.01
EASY_TIME = 5.0
SOLVED_GAP = 1e-3


def pace_lb(result) -> float:
    """Seconds (or nodes, in deterministic mode) per unit of lower-bound improvement."""
    if not result.lb_trace:
        # the root relaxation never finished: no improvement at all
        return PACE_CAP
    improvement = result.best_lb - result.lb_trace[0][1]
    if not math.isfinite(improvement) or improvement <= 1e-9:
        return PACE_CAP
    return pace_from(result.wall_time, improvement)


def pace_from(elapsed: float, improvement: float) -> float:
    if not math.isfinite(improvement) or improvement <= 1e-9:
        return PACE_CAP
    return elapsed / improvement


def geo_mean(values: Iterable[float], shift: float = 0.0) -> float:
    vals = np.asarray(list(values), dtype=float)
    if vals.size == 0:
        raise ValueError("geometric mean of an empty sequence")
    if np.any(vals < 0) or shift < 0:
        raise ValueError("geometric mean needs nonnegative values and shift")
    return float(np.exp(np.mean(np.log(vals + shift))) - shift)


@dataclass(frozen=True)
class RunRow:
    instance: str
    approach: str
    solved: bool
    gap: float | None
    time: float
    pace: float
    nodes: int

    def __post_init__(self):
        if self.pace <= 0:
            raise ValueError(f"{self.instance}/{self.approach}: pace must be > 0")
        if self.solved and (self.gap is None or self.gap > SOLVED_GAP + 1e-12):
            raise ValueError(f"{self.instance}/{self.approach}: solved run with gap {self.gap}")


@dataclass
class MetricColumn:
    values: dict[str, float]
    count: int
    instances: list[str] = field(default_factory=list)


@dataclass
class MetricTable:
    approaches: list[str]
    solved: dict[str, int]
    total: int
    gap: MetricColumn
    time: MetricColumn
    pace: MetricColumn
    nodes: MetricColumn
    mean_nodes: MetricColumn
    metadata: dict[str, float] = field(default_factory=dict)

    def format(self) -> str:
        head = (
            f"{'approach':<14} {'Solved (' + str(self.total) + ')':>12} {'Gap (' + str(self.gap.count) + ')':>14} "
            f"{'Time (' + str(self.time.count) + ')':>14} {'Pace (' + str(self.pace.count) + ')':>14} "
            f"{'Nodes (' + str(self.nodes.count) + ')':>14} {'Mean nodes (' + str(self.mean_nodes.count) + ')':>18}"
        )
        lines = [head]

        def fmt(col: MetricColumn, a: str) -> str:
            v = col.values.get(a)
            return "-" if v is None else f"{v:.6g}"

        for a in self.approaches:
            lines.append(
                f"{a:<14} {self.solved[a]:>12d} {fmt(self.gap, a):>14} {fmt(self.time, a):>14} "
                f"{fmt(self.pace, a):>14} {fmt(self.nodes, a):>14} {fmt(self.mean_nodes, a):>18}"
            )
        lines.append(
            "# gap: geometric mean shifted by %g; time: floored at %g; pace cap %g"
            % (self.metadata.get("gap_shift", GAP_SHIFT), self.metadata.get("time_floor", TIME_FLOOR), PACE_CAP)
        )
        return "\n".join(lines)


def _index(rows: Sequence[RunRow]) -> tuple[list[str], list[str], dict[tuple[str, str], RunRow]]:
    table: dict[tuple[str, str], RunRow] = {}
    for r in rows:
        key = (r.instance, r.approach)
        if key in table:
            raise ValueError(f"duplicate row for {key}")
        table[key] = r
    instances = sorted({r.instance for r in rows})
    approaches = list(dict.fromkeys(r.approach for r in rows))
    missing = [(i, a) for i in instances for a in approaches if (i, a) not in table]
    if missing:
        raise ValueError(f"inconsistent instance sets, e.g. no row for {missing[0]}")
    return instances, approaches, table


def exclusion_sets(rows: Sequence[RunRow], easy_time: float = EASY_TIME) -> dict[str, list[str]]:
    """Instances kept for each metric column."""
    instances, approaches, t = _index(rows)
    keep: dict[str, list[str]] = {"gap": [], "time": [], "pace": [], "nodes": []}
    for i in instances:
        rs = [t[i, a] for a in approaches]
        all_solved = all(r.solved for r in rs)
        none_solved = not any(r.solved for r in rs)
        all_easy = all(r.solved and r.time < easy_time for r in rs)
        if not any(r.gap is None for r in rs) and not all_solved:
            keep["gap"].append(i)
        if not all_easy and not none_solved:
            keep["time"].append(i)
        if not all_easy:
            keep["pace"].append(i)
        if all_solved:
            keep["nodes"].append(i)
    return keep


def aggregate(
    rows: Sequence[RunRow],
    easy_time: float = EASY_TIME,
    gap_shift: float = GAP_SHIFT,
    time_floor: float = TIME_FLOOR,
) -> MetricTable:
    instances, approaches, t = _index(rows)
    keep = exclusion_sets(rows, easy_time)

    def column(name: str, value, mean) -> MetricColumn:
        ids = keep[name]
        vals = {a: mean([value(t[i, a]) for i in ids]) for a in approaches} if ids else {}
        return MetricColumn(vals, len(ids), ids)

    return MetricTable(
        approaches=approaches,
        solved={a: sum(t[i, a].solved for i in instances) for a in approaches},
        total=len(instances),
        gap=column("gap", lambda r: r.gap, lambda v: geo_mean(v, gap_shift)),
        time=column("time", lambda r: max(r.time, time_floor), geo_mean),
        pace=column("pace", lambda r: r.pace, geo_mean),
        nodes=column("nodes", lambda r: max(r.nodes, 1), geo_mean),
        mean_nodes=MetricColumn(
            {a: float(np.mean([t[i, a].nodes for i in keep["nodes"]])) for a in approaches} if keep["nodes"] else {},
            len(keep["nodes"]),
            keep["nodes"],
        ),
        metadata={"gap_shift": gap_shift, "time_floor": time_floor, "easy_time": easy_time},
    )


def performance_profile(matrix: Mapping[str, Sequence[float]]) -> dict[str, list[tuple[float, float]]]:
    """Dolan-More profiles.  ``matrix[approach][i]`` is the metric on instance
    ``i`` (lower is better, ``inf`` for missing).  Each curve lists
    ``(tau, rho(tau))`` at every breakpoint."""
    approaches = list(matrix)
    M = np.array([np.asarray(matrix[a], dtype=float) for a in approaches])
    if M.size and np.any(M <= 0):
        raise ValueError("profile entries must be > 0")
    n_inst = M.shape[1] if M.ndim == 2 else 0
    if n_inst == 0:
        return {a: [] for a in approaches}
    best = M.min(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratios = np.where(np.isfinite(best), M / best, np.inf)
    taus = np.unique(ratios[np.isfinite(ratios)])
    if taus.size == 0 or taus[0] > 1.0:
        taus = np.concatenate([[1.0], taus])
    return {
        a: [(float(tau), float(np.count_nonzero(ratios[k] <= tau)) / n_inst) for tau in taus]
        for k, a in enumerate(approaches)
    }


def profile_rows(curves: Mapping[str, list[tuple[float, float]]]) -> list[tuple[str, float, float]]:
    return [(a, tau, rho) for a, pts in curves.items() for tau, rho in pts]
