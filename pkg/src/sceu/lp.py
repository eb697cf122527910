"""Exact feasibility of ranked additive systems.

Given items with sparse integer coefficient vectors and integer ranks, decide
whether some real vector ``x`` gives every item a value ``V(i) = c_i . x``
such that equal ranks get equal values and higher ranks strictly higher
values. Answers are exact: a feasible verdict carries a rational solution
that has been checked in rational arithmetic, an infeasible verdict carries a
nonnegative combination of strict rows that vanishes identically.

Equalities are eliminated exactly first. The remaining max-margin problem is
solved with HiGHS and the floating-point answer is rationalised and
re-verified; when that fails, or when HiGHS finds no positive margin, a small
exact simplex decides.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Mapping, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix

Row = dict  # var -> Fraction

MARGIN_TOL = 1e-9


@dataclass
class FeasibilityResult:
    feasible: bool
    solution: dict | None = None
    margin: Fraction | None = None
    # [(lower item, upper item, multiplier)]: the weighted strict rows cancel
    certificate: list | None = None
    method: str = ""
    classes: list = field(default_factory=list)


def _axpy(target: Row, coef, src: Row) -> None:
    for v, c in src.items():
        nv = target.get(v, 0) + coef * c
        if nv:
            target[v] = nv
        else:
            target.pop(v, None)


class Eliminator:
    """Gauss-Jordan elimination of homogeneous equalities, kept fully reduced.

    Each pivot variable is expressed in terms of free variables only.
    """

    def __init__(self):
        self.pivots: dict[Hashable, Row] = {}
        self._uses: dict[Hashable, set] = {}

    def reduce(self, row: Row) -> Row:
        out = {v: Fraction(c) for v, c in row.items() if c}
        for v in [v for v in out if v in self.pivots]:
            c = out.pop(v, None)
            if c:
                _axpy(out, c, self.pivots[v])
        return out

    def add(self, row: Row) -> bool:
        row = self.reduce(row)
        if not row:
            return False
        # fewest dependants keeps fill-in down; repr makes ties deterministic
        p = min(row, key=lambda v: (len(self._uses.get(v, ())), repr(v)))
        c = row.pop(p)
        expr = {v: -a / c for v, a in row.items()}
        for q in sorted(self._uses.pop(p, ()), key=repr):
            e = self.pivots[q]
            a = e.pop(p, None)
            if a is None:
                continue
            _axpy(e, a, expr)
            for v in expr:
                self._uses.setdefault(v, set()).add(q)
        self.pivots[p] = expr
        for v in expr:
            self._uses.setdefault(v, set()).add(p)
        return True

    def expand(self, free: Mapping) -> dict:
        values = dict(free)
        for p, expr in self.pivots.items():
            values[p] = sum((a * free.get(v, 0) for v, a in expr.items()), Fraction(0))
        return values


# -- exact simplex -------------------------------------------------------------

def simplex_max(A: list[list[Fraction]], b: list[Fraction], c: list[Fraction]):
    """Maximise ``c.z`` subject to ``A z <= b``, ``z >= 0``, with ``b >= 0``.

    Dense tableau in rationals with Bland's rule, so it terminates. Returns
    ``(z, y, value)`` where ``y`` are the optimal dual values of the rows, or
    raises ValueError if unbounded.
    """
    m, n = len(A), len(c)
    if any(bi < 0 for bi in b):
        raise ValueError("simplex_max needs a nonnegative right-hand side")
    T = [list(map(Fraction, A[i])) + [Fraction(int(i == j)) for j in range(m)] + [Fraction(b[i])]
         for i in range(m)]
    obj = [-Fraction(cj) for cj in c] + [Fraction(0)] * m + [Fraction(0)]
    basis = [n + i for i in range(m)]
    width = n + m
    while True:
        enter = next((j for j in range(width) if obj[j] < 0), None)
        if enter is None:
            break
        leave, best = None, None
        for i in range(m):
            a = T[i][enter]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    leave, best = i, ratio
        if leave is None:
            raise ValueError("linear program is unbounded")
        piv = T[leave][enter]
        row = [x / piv for x in T[leave]]
        T[leave] = row
        for i in range(m):
            if i != leave and T[i][enter]:
                f = T[i][enter]
                T[i] = [x - f * y for x, y in zip(T[i], row)]
        if obj[enter]:
            f = obj[enter]
            obj = [x - f * y for x, y in zip(obj, row)]
        basis[leave] = enter
    z = [Fraction(0)] * width
    for i, j in enumerate(basis):
        z[j] = T[i][-1]
    return z[:n], obj[n:n + m], obj[-1]


# -- ranked additive feasibility -----------------------------------------------

def _rank_classes(ranks: Sequence[int]) -> list[list[int]]:
    by_rank: dict[int, list[int]] = {}
    for i, r in enumerate(ranks):
        by_rank.setdefault(r, []).append(i)
    return [by_rank[r] for r in sorted(by_rank)]


def _diff(a: Mapping, b: Mapping) -> Row:
    out = {v: Fraction(c) for v, c in a.items() if c}
    _axpy(out, -1, {v: Fraction(c) for v, c in b.items()})
    return out


def _verify(items, classes, values) -> bool:
    def val(i):
        return sum((Fraction(c) * values.get(v, 0) for v, c in items[i].items()), Fraction(0))
    prev = None
    for cls in classes:
        vals = {val(i) for i in cls}
        if len(vals) != 1:
            return False
        (cur,) = vals
        if prev is not None and not cur > prev:
            return False
        prev = cur
    return True


def _rationalise(x: np.ndarray, limit: int | None) -> list[Fraction]:
    if limit is None:
        return [Fraction(float(v)) for v in x]
    return [Fraction(float(v)).limit_denominator(limit) for v in x]


def additive_feasibility(items: Sequence[Mapping[Hashable, int]],
                         ranks: Sequence[int]) -> FeasibilityResult:
    """Decide whether a value vector realises the ranking of ``items``."""
    classes = _rank_classes(ranks)
    # the sparsest member represents each class
    reps = [min(cls, key=lambda i: (len(items[i]), i)) for cls in classes]
    elim = Eliminator()
    eq_rows = [(_diff(items[i], items[r])) for cls, r in zip(classes, reps) for i in cls if i != r]
    for row in sorted(eq_rows, key=len):
        elim.add(row)
    strict = []
    for k in range(len(classes) - 1):
        row = elim.reduce(_diff(items[reps[k + 1]], items[reps[k]]))
        if not row:
            return FeasibilityResult(False, certificate=[(reps[k], reps[k + 1], Fraction(1))],
                                     method="elimination", classes=classes)
        strict.append(row)
    free = sorted({v for row in strict for v in row}, key=repr)
    if not strict:
        values = elim.expand({})
        return FeasibilityResult(True, values, None, method="elimination", classes=classes)

    col = {v: j for j, v in enumerate(free)}
    n = len(free)
    data, ri, ci = [], [], []
    for i, row in enumerate(strict):
        for v, a in row.items():
            data.append(-float(a))
            ri.append(i)
            ci.append(col[v])
        data.append(1.0)
        ri.append(i)
        ci.append(n)
    A = csr_matrix((data, (ri, ci)), shape=(len(strict), n + 1))
    cost = np.zeros(n + 1)
    cost[n] = -1.0
    res = linprog(cost, A_ub=A, b_ub=np.zeros(len(strict)),
                  bounds=[(-1, 1)] * n + [(0, 1)], method="highs")
    if res.status == 0 and -res.fun > MARGIN_TOL:
        for limit in (10 ** 4, 10 ** 8, None):
            xs = _rationalise(res.x[:n], limit)
            margins = [sum((a * xs[col[v]] for v, a in row.items()), Fraction(0)) for row in strict]
            if min(margins) > 0:
                values = elim.expand(dict(zip(free, xs)))
                if _verify(items, classes, values):
                    return FeasibilityResult(True, values, min(margins), method="highs+exact",
                                             classes=classes)
    return _exact(items, classes, reps, strict, free, elim)


def _exact(items, classes, reps, strict, free, elim) -> FeasibilityResult:
    # max t  s.t.  -S(xp - xn) + t <= 0,  xp <= 1,  xn <= 1,  t <= 1
    n, m = len(free), len(strict)
    col = {v: j for j, v in enumerate(free)}
    width = 2 * n + 1
    A, b = [], []
    for row in strict:
        r = [Fraction(0)] * width
        for v, a in row.items():
            r[col[v]] = -a
            r[n + col[v]] = a
        r[-1] = Fraction(1)
        A.append(r)
        b.append(Fraction(0))
    for j in range(width):
        r = [Fraction(0)] * width
        r[j] = Fraction(1)
        A.append(r)
        b.append(Fraction(1))
    c = [Fraction(0)] * (2 * n) + [Fraction(1)]
    z, y, value = simplex_max(A, b, c)
    if value > 0:
        xs = [z[j] - z[n + j] for j in range(n)]
        values = elim.expand(dict(zip(free, xs)))
        assert _verify(items, classes, values)
        return FeasibilityResult(True, values, value, method="exact-simplex", classes=classes)
    cert = [(reps[k], reps[k + 1], y[k]) for k in range(m) if y[k]]
    return FeasibilityResult(False, certificate=cert, method="exact-simplex", classes=classes)


def check_certificate(items: Sequence[Mapping[Hashable, int]], ranks: Sequence[int],
                      certificate) -> bool:
    """Replay an infeasibility certificate.

    Valid when the multipliers are positive, each pair is strictly ordered by
    rank, and the weighted sum of (upper - lower) differences lies in the span
    of the within-rank equalities.
    """
    if not certificate:
        return False
    classes = _rank_classes(ranks)
    elim = Eliminator()
    for cls in classes:
        for i in cls[1:]:
            elim.add(_diff(items[i], items[cls[0]]))
    total: Row = {}
    for lo, hi, w in certificate:
        if w <= 0 or not ranks[hi] > ranks[lo]:
            return False
        _axpy(total, Fraction(w), _diff(items[hi], items[lo]))
    return not elim.reduce(total)
