"""Reader and writer for the ``.pop`` instance format.

::

    # name: demo
    vars 2
    bounds 0 1 0 1
    min: 1 x1*x2
    c1: 1 x1 + 1 x2 >= 1

Variables are numbered from 1 in files and from 0 in memory.  Terms are
``coef x<i>[^p][*x<j>[^p]...]`` joined by ``+``/``-``; a bare number is a
constant.  ``<=`` constraints are negated into ``>=`` rows.
"""
from __future__ import annotations

import re
from dataclasses import replace
from pathlib import Path

from ..poly import Multiset, POProblem, Polynomial, problem_validate

_OPS = (">=", "<=", "=")
_FACTOR = re.compile(r"^x(\d+)(?:\^(\d+))?$")


class ProblemParseError(ValueError):
    def __init__(self, lineno: int | None, msg: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}" if lineno is not None else msg)


def _number(tok: str, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ProblemParseError(lineno, f"expected a number, got {tok!r}") from None


def _monomial(tok: str, n: int, lineno: int) -> Multiset:
    items: list[int] = []
    for factor in tok.split("*"):
        m = _FACTOR.match(factor)
        if not m:
            raise ProblemParseError(lineno, f"bad monomial factor {factor!r}")
        i = int(m.group(1))
        if not 1 <= i <= n:
            raise ProblemParseError(lineno, f"unknown variable x{i} (problem has {n} variables)")
        p = int(m.group(2) or 1)
        if p < 1:
            raise ProblemParseError(lineno, f"bad exponent in {factor!r}")
        items.extend([i - 1] * p)
    return Multiset(items)


def _polynomial(tokens: list[str], n: int, lineno: int) -> Polynomial:
    terms = []
    sign = 1.0
    k = 0
    expecting_term = True
    while k < len(tokens):
        tok = tokens[k]
        if tok in ("+", "-"):
            if tok == "-":
                sign = -sign
            k += 1
            expecting_term = True
            continue
        if not expecting_term:
            raise ProblemParseError(lineno, f"missing '+' or '-' before {tok!r}")
        if tok.startswith("x") or tok.startswith("-x"):
            coef = -1.0 if tok.startswith("-") else 1.0
            terms.append((sign * coef, _monomial(tok.lstrip("-"), n, lineno)))
            k += 1
        else:
            coef = _number(tok, lineno)
            k += 1
            if k < len(tokens) and tokens[k].startswith("x"):
                terms.append((sign * coef, _monomial(tokens[k], n, lineno)))
                k += 1
            else:
                terms.append((sign * coef, Multiset()))
        sign = 1.0
        expecting_term = False
    if expecting_term and tokens:
        raise ProblemParseError(lineno, "dangling sign at end of polynomial")
    return Polynomial(terms)


def parse_problem(text: str, name: str = "") -> POProblem:
    n = None
    lower = upper = None
    objective = None
    ineqs, eqs = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw
        if "#" in line:
            comment = line[line.index("#") + 1 :].strip()
            if comment.startswith("name:") and not name:
                name = comment[len("name:") :].strip()
            line = line[: line.index("#")]
        tokens = line.split()
        if not tokens:
            continue
        head = tokens[0]
        if head == "vars":
            if n is not None:
                raise ProblemParseError(lineno, "duplicate 'vars' line")
            if len(tokens) != 2 or not tokens[1].isdigit() or int(tokens[1]) < 1:
                raise ProblemParseError(lineno, "expected 'vars N' with N >= 1")
            n = int(tokens[1])
            continue
        if n is None:
            raise ProblemParseError(lineno, "'vars N' must come first")
        if head == "bounds":
            if len(tokens) != 1 + 2 * n:
                raise ProblemParseError(lineno, f"expected {2 * n} bound values, got {len(tokens) - 1}")
            vals = [_number(t, lineno) for t in tokens[1:]]
            lower, upper = vals[0::2], vals[1::2]
            for j, (lo, up) in enumerate(zip(lower, upper)):
                if lo > up:
                    raise ProblemParseError(lineno, f"bound inversion at variable x{j + 1}")
            continue
        if not head.endswith(":"):
            raise ProblemParseError(lineno, f"unrecognised line starting with {head!r}")
        label = head[:-1]
        body = tokens[1:]
        if label == "min":
            if objective is not None:
                raise ProblemParseError(lineno, "duplicate objective")
            objective = _polynomial(body, n, lineno)
            continue
        ops = [k for k, t in enumerate(body) if t in _OPS]
        if len(ops) != 1:
            raise ProblemParseError(lineno, "constraint needs exactly one of >=, <=, =")
        k = ops[0]
        if k != len(body) - 2:
            raise ProblemParseError(lineno, "constraint right-hand side must be a single number")
        poly = _polynomial(body[:k], n, lineno)
        rhs = _number(body[k + 1], lineno)
        op = body[k]
        if op == ">=":
            ineqs.append((poly, rhs))
        elif op == "<=":
            ineqs.append((-poly, -rhs))
        else:
            eqs.append((poly, rhs))
    if n is None:
        raise ProblemParseError(None, "missing 'vars' line")
    if lower is None:
        raise ProblemParseError(None, "missing 'bounds' line")
    if objective is None:
        raise ProblemParseError(None, "missing 'min:' objective")
    p = POProblem(n, objective, tuple(ineqs), tuple(eqs), tuple(lower), tuple(upper), name)
    report = problem_validate(p)
    if not report.ok:
        raise ProblemParseError(None, "; ".join(report.problems))
    return p


def format_monomial(s: Multiset) -> str:
    return "*".join(f"x{i + 1}" if m == 1 else f"x{i + 1}^{m}" for i, m in s.runs)


def format_polynomial(p: Polynomial) -> str:
    if not p.terms:
        return "0"
    parts = []
    for k, t in enumerate(p.terms):
        c = t.coefficient
        mono = format_monomial(t.support)
        if k == 0:
            text = repr(c)
        else:
            parts.append("-" if c < 0 else "+")
            text = repr(abs(c))
        parts.append(f"{text} {mono}" if mono else text)
    return " ".join(parts)


def write_problem(p: POProblem) -> str:
    lines = []
    if p.name:
        lines.append(f"# name: {p.name}")
    lines.append(f"vars {p.num_vars}")
    lines.append("bounds " + " ".join(f"{lo!r} {up!r}" for lo, up in zip(p.lower, p.upper)))
    lines.append("min: " + format_polynomial(p.objective))
    k = 1
    for poly, rhs in p.ineq_constraints:
        lines.append(f"c{k}: {format_polynomial(poly)} >= {rhs!r}")
        k += 1
    for poly, rhs in p.eq_constraints:
        lines.append(f"c{k}: {format_polynomial(poly)} = {rhs!r}")
        k += 1
    return "\n".join(lines) + "\n"


def read_problem(path) -> POProblem:
    path = Path(path)
    p = parse_problem(path.read_text(encoding="utf-8"))
    return p if p.name else replace(p, name=path.stem)
