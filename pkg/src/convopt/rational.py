"""Exact rational helpers on top of gmpy2.mpq."""
from __future__ import annotations

from fractions import Fraction

import gmpy2

Q = gmpy2.mpq
ZERO = Q(0)
ONE = Q(1)


def q(v) -> "gmpy2.mpq":
    """Coerce int, Fraction, mpq, float or 'p/q' string to mpq."""
    if isinstance(v, str):
        return Q(Fraction(v.strip()))
    if isinstance(v, Fraction):
        return Q(v.numerator, v.denominator)
    return Q(v)


def qvec(xs) -> list:
    return [q(x) for x in xs]


def qmat(rows) -> list:
    return [[q(x) for x in row] for row in rows]


def fmt(v) -> str:
    v = q(v)
    if v.denominator == 1:
        return str(v.numerator)
    return f"{v.numerator}/{v.denominator}"


def to_fraction(v) -> Fraction:
    v = q(v)
    return Fraction(int(v.numerator), int(v.denominator))


def rref(rows, ncols: int | None = None):
    """Reduced row echelon form over Q.

    Returns (reduced rows, pivot columns). Only the first `ncols` columns are
    eligible as pivots (defaults to all).
    """
    m = [list(map(q, r)) for r in rows]
    if not m:
        return [], []
    width = len(m[0])
    limit = width if ncols is None else ncols
    pivots = []
    row = 0
    for col in range(limit):
        piv = next((i for i in range(row, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[row], m[piv] = m[piv], m[row]
        pv = m[row][col]
        if pv != 1:
            m[row] = [x / pv for x in m[row]]
        prow = m[row]
        for i in range(len(m)):
            if i != row and m[i][col] != 0:
                f = m[i][col]
                m[i] = [a - f * b for a, b in zip(m[i], prow)]
        pivots.append(col)
        row += 1
        if row == len(m):
            break
    return m, pivots


def rank(rows) -> int:
    rows = [r for r in rows if any(x != 0 for x in r)]
    if not rows:
        return 0
    return len(rref(rows)[1])


def solve_particular(A, b):
    """One solution of A x = b (free variables set to zero); None if inconsistent."""
    n = len(A[0]) if A else 0
    aug = [list(row) + [bi] for row, bi in zip(A, b)]
    red, pivots = rref(aug, ncols=n)
    for row in red[len(pivots):]:
        if row[-1] != 0:
            return None
    x = [ZERO] * n
    for i, col in enumerate(pivots):
        x[col] = red[i][-1]
    return x


def dot(a, b):
    s = ZERO
    for x, y in zip(a, b):
        if x and y:
            s += x * y
    return s
