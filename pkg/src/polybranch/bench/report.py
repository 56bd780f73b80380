"""Comma-separated run reports and profile files."""
from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Sequence

from .metrics import RunRow

COLUMNS = ("instance", "approach", "solved", "gap", "time_s", "pace", "nodes")


class ReportFormatError(ValueError):
    pass


def _fmt(v: float) -> str:
    return repr(float(v))


def dumps_report(rows: Iterable[RunRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow(
            [
                r.instance,
                r.approach,
                "true" if r.solved else "false",
                "" if r.gap is None else _fmt(r.gap),
                _fmt(r.time),
                _fmt(r.pace),
                str(int(r.nodes)),
            ]
        )
    return buf.getvalue()


def loads_report(text: str) -> list[RunRow]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ReportFormatError("empty report file (no header)") from None
    unknown = [c for c in header if c not in COLUMNS]
    if unknown:
        raise ReportFormatError(f"unknown column {unknown[0]!r}")
    missing = [c for c in COLUMNS if c not in header]
    if missing:
        raise ReportFormatError(f"missing column {missing[0]!r}")
    pos = {c: header.index(c) for c in COLUMNS}
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != len(header):
            raise ReportFormatError(f"line {lineno}: expected {len(header)} fields, got {len(rec)}")
        get = lambda c: rec[pos[c]]  # noqa: E731
        solved = get("solved").strip().lower()
        if solved not in ("true", "false"):
            raise ReportFormatError(f"line {lineno}: solved must be true/false, got {get('solved')!r}")
        try:
            rows.append(
                RunRow(
                    instance=get("instance"),
                    approach=get("approach"),
                    solved=solved == "true",
                    gap=None if get("gap") == "" else float(get("gap")),
                    time=float(get("time_s")),
                    pace=float(get("pace")),
                    nodes=int(get("nodes")),
                )
            )
        except ValueError as exc:
            raise ReportFormatError(f"line {lineno}: {exc}") from None
    return rows


def write_report(rows: Iterable[RunRow], path) -> None:
    Path(path).write_text(dumps_report(rows), encoding="utf-8")


def read_report(path) -> list[RunRow]:
    return loads_report(Path(path).read_text(encoding="utf-8"))


def dumps_profile(triples: Sequence[tuple[str, float, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("approach", "tau", "rho"))
    for a, tau, rho in triples:
        w.writerow((a, _fmt(tau), _fmt(rho)))
    return buf.getvalue()
