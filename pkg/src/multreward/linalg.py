"""Exact linear algebra over the rationals: square solves and a two-phase simplex."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Sequence


class DimensionError(ValueError):
    pass


class SingularMatrixError(ArithmeticError):
    pass


class UnboundedError(ArithmeticError):
    """The LP objective is unbounded below; none of the LPs built by this package should be."""


@dataclass(frozen=True)
class LinearSystem:
    matrix: Sequence[Sequence[Fraction]]
    rhs: Sequence[Fraction]


def _size(q: Fraction) -> int:
    return q.numerator.bit_length() + q.denominator.bit_length()


def solve_square(sys: LinearSystem) -> list[Fraction]:
    """Unique solution of ``matrix @ x = rhs``; raises SingularMatrixError otherwise.

    Rows are scaled to integers and eliminated fraction-free (Bareiss); the pivot
    in each column is the nonzero entry of smallest magnitude.
    """
    n = len(sys.matrix)
    if len(sys.rhs) != n or any(len(row) != n for row in sys.matrix):
        raise DimensionError("square matrix and matching right-hand side required")
    if n == 0:
        return []
    rows = []
    for row, b in zip(sys.matrix, sys.rhs):
        entries = [Fraction(v) for v in row] + [Fraction(b)]
        d = lcm(*(v.denominator for v in entries))
        rows.append([v.numerator * (d // v.denominator) for v in entries])
    prev = 1
    for k in range(n):
        candidates = [i for i in range(k, n) if rows[i][k] != 0]
        if not candidates:
            raise SingularMatrixError(f"no pivot in column {k}")
        p = min(candidates, key=lambda i: abs(rows[i][k]))
        rows[k], rows[p] = rows[p], rows[k]
        pivot = rows[k][k]
        for i in range(k + 1, n):
            ri = rows[i]
            factor = ri[k]
            for j in range(k + 1, n + 1):
                ri[j] = (pivot * ri[j] - factor * rows[k][j]) // prev
            ri[k] = 0
        prev = pivot
    x = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        acc = Fraction(rows[i][n])
        for j in range(i + 1, n):
            acc -= rows[i][j] * x[j]
        x[i] = acc / rows[i][i]
    return x


def solve_or_none(sys: LinearSystem) -> list[Fraction] | None:
    try:
        return solve_square(sys)
    except SingularMatrixError:
        return None


class LPStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"


@dataclass
class LinearProgram:
    """Minimise ``objective @ x`` subject to ``eq`` rows (=) and ``ge`` rows (>=).

    Each constraint is ``(coefficients, bound)``.  Variables are non-negative
    unless listed in ``free``.
    """

    objective: Sequence[Fraction]
    eq: list[tuple[Sequence[Fraction], Fraction]] = field(default_factory=list)
    ge: list[tuple[Sequence[Fraction], Fraction]] = field(default_factory=list)
    free: frozenset[int] = frozenset()

    @property
    def nvars(self) -> int:
        return len(self.objective)


@dataclass(frozen=True)
class LPResult:
    status: LPStatus
    x: tuple[Fraction, ...] | None = None
    objective: Fraction | None = None

    @property
    def feasible(self) -> bool:
        return self.status is LPStatus.OPTIMAL


class _Tableau:
    """Dense simplex tableau ``rows[i] = (coeffs..., rhs)`` with Bland's rule."""

    def __init__(self, rows, basis, ncols):
        self.rows = rows
        self.basis = basis
        self.ncols = ncols

    def pivot(self, r: int, c: int):
        row = self.rows[r]
        pv = row[c]
        if pv != 1:
            self.rows[r] = row = [v / pv for v in row]
        for i, other in enumerate(self.rows):
            if i != r and other[c] != 0:
                f = other[c]
                self.rows[i] = [a - f * b for a, b in zip(other, row)]
        self.basis[r] = c

    def optimize(self, cost: list[Fraction], allowed: set[int]):
        """Minimise ``cost @ x`` over the current basis; entering columns restricted to ``allowed``."""
        while True:
            # reduced costs: c_j - c_B B^-1 A_j
            cb = [cost[b] for b in self.basis]
            entering = None
            for j in sorted(allowed):
                if j in self.basis:
                    continue
                rc = cost[j] - sum(cb[i] * self.rows[i][j] for i in range(len(self.rows)) if cb[i])
                if rc < 0:
                    entering = j
                    break
            if entering is None:
                return
            best = None
            for i, row in enumerate(self.rows):
                a = row[entering]
                if a > 0:
                    ratio = row[-1] / a
                    key = (ratio, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                raise UnboundedError("objective unbounded below")
            self.pivot(best[1], entering)


def lp_solve(lp: LinearProgram) -> LPResult:
    """Exact two-phase simplex with Bland's anti-cycling rule."""
    n = lp.nvars
    for coeffs, _ in list(lp.eq) + list(lp.ge):
        if len(coeffs) != n:
            raise DimensionError("constraint width does not match the objective")
    # column layout: x (n) | x^- for free vars | slacks for ge rows | artificials
    free = sorted(lp.free)
    neg_col = {v: n + k for k, v in enumerate(free)}
    nstruct = n + len(free)
    m_eq, m_ge = len(lp.eq), len(lp.ge)
    nslack = m_ge
    m = m_eq + m_ge
    ncols = nstruct + nslack + m
    rows = []
    for i, (coeffs, b) in enumerate(list(lp.eq) + list(lp.ge)):
        row = [Fraction(0)] * (ncols + 1)
        for j, v in enumerate(coeffs):
            v = Fraction(v)
            row[j] = v
            if j in neg_col:
                row[neg_col[j]] = -v
        if i >= m_eq:
            row[nstruct + (i - m_eq)] = Fraction(-1)
        row[-1] = Fraction(b)
        if row[-1] < 0:
            row = [-v for v in row]
        row[nstruct + nslack + i] = Fraction(1)
        rows.append(row)
    art = set(range(nstruct + nslack, ncols))
    tab = _Tableau(rows, [nstruct + nslack + i for i in range(m)], ncols)
    phase1 = [Fraction(0)] * (nstruct + nslack) + [Fraction(1)] * m
    tab.optimize(phase1, set(range(ncols)))
    if sum(tab.rows[i][-1] for i, b in enumerate(tab.basis) if b in art) != 0:
        return LPResult(LPStatus.INFEASIBLE)
    # drive remaining (zero-level) artificials out of the basis; drop redundant rows
    i = 0
    while i < len(tab.rows):
        if tab.basis[i] in art:
            col = next((j for j in range(nstruct + nslack) if tab.rows[i][j] != 0), None)
            if col is None:
                del tab.rows[i]
                del tab.basis[i]
                continue
            tab.pivot(i, col)
        i += 1
    cost = [Fraction(0)] * ncols
    for j, v in enumerate(lp.objective):
        cost[j] = Fraction(v)
        if j in neg_col:
            cost[neg_col[j]] = -Fraction(v)
    tab.optimize(cost, set(range(nstruct + nslack)))
    values = [Fraction(0)] * ncols
    for i, b in enumerate(tab.basis):
        values[b] = tab.rows[i][-1]
    x = [values[j] - (values[neg_col[j]] if j in neg_col else 0) for j in range(n)]
    obj = sum((Fraction(c) * v for c, v in zip(lp.objective, x)), Fraction(0))
    return LPResult(LPStatus.OPTIMAL, tuple(x), obj)
