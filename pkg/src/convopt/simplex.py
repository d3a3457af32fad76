"""Exact rational simplex for inequality-form linear programs.

Problems are ``min c.x  s.t.  G x <= rhs`` with x free. They are solved through
the standard-form dual ``min rhs.y  s.t.  G^T y = -c, y >= 0`` with Bland's
rule, so every run is deterministic and terminates. The optimal dual basis
names n linearly independent rows of G, which pins down a primal vertex.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .rational import Q, ZERO, dot, q, qmat, qvec, rank, solve_particular


class LPError(ArithmeticError):
    pass


class Infeasible(LPError):
    pass


class Unbounded(LPError):
    pass


@dataclass
class LPInstance:
    """min c.x s.t. G x <= w + F theta."""
    c: list
    G: list
    w: list
    F: list
    theta_names: list = field(default_factory=list)
    row_names: list = field(default_factory=list)

    def __post_init__(self):
        self.c = qvec(self.c)
        self.G = qmat(self.G)
        self.w = qvec(self.w)
        self.F = qmat(self.F) if self.F else [[] for _ in self.G]
        if not (len(self.G) == len(self.w) == len(self.F)):
            raise ValueError("G, w and F must have the same number of rows")
        if any(len(row) != len(self.c) for row in self.G):
            raise ValueError("every row of G needs one entry per variable")

    @property
    def n_vars(self) -> int:
        return len(self.c)

    @property
    def n_rows(self) -> int:
        return len(self.G)

    @property
    def n_params(self) -> int:
        return len(self.F[0]) if self.F else 0

    def rhs(self, theta) -> list:
        theta = qvec(theta)
        if len(theta) != self.n_params:
            raise ValueError(f"theta has {len(theta)} entries, LP expects {self.n_params}")
        return [wi + dot(fi, theta) for wi, fi in zip(self.w, self.F)]


@dataclass
class VertexSolution:
    x: list
    objective: object
    tight_rows: tuple


def _pivot(T, basis, r, col):
    prow = T[r]
    pv = prow[col]
    nz = [j for j, v in enumerate(prow) if v]
    if pv != 1:
        for j in nz:
            prow[j] /= pv
    for i, row in enumerate(T):
        if i == r:
            continue
        f = row[col]
        if f:
            for j in nz:
                row[j] -= f * prow[j]
    if basis is not None:
        basis[r] = col


def _run(T, basis, ncols, obj):
    """Bland's-rule iterations on tableau T (last column rhs) minimising obj.

    `obj` is the reduced-cost row, updated in place alongside T. Returns False
    if the objective is unbounded below.
    """
    rows = T + [obj]
    m = len(T)
    while True:
        col = next((j for j in range(ncols) if obj[j] < 0), None)
        if col is None:
            return True
        best = None
        for i in range(m):
            a = T[i][col]
            if a > 0:
                ratio = T[i][-1] / a
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            return False
        _pivot(rows, basis, best[1], col)


def _dual_basis(c, A, b):
    """Optimal basis (row indices of A) of the dual, or raise."""
    m, n = len(A), len(c)
    g = [-ci for ci in c]
    # Row j of the dual: sum_i A[i][j] y_i = g_j.
    T = []
    for j in range(n):
        sign = -1 if g[j] < 0 else 1
        row = [A[i][j] * sign for i in range(m)]
        row += [Q(1) if k == j else ZERO for k in range(n)]
        row.append(g[j] * sign)
        T.append(row)
    basis = [m + j for j in range(n)]
    # Phase 1: minimise the sum of artificials.
    obj = [ZERO] * (m + n + 1)
    for row in T:
        for k in range(m):
            obj[k] -= row[k]
        obj[-1] -= row[-1]
    _run(T, basis, m, obj)
    if obj[-1] != 0:
        return None
    # Drive artificials out; rows where that is impossible are redundant.
    keep = []
    for r in range(len(T)):
        if basis[r] >= m:
            col = next((k for k in range(m) if T[r][k] != 0), None)
            if col is None:
                continue
            _pivot(T + [obj], basis, r, col)
        keep.append(r)
    T = [T[r][:m] + [T[r][-1]] for r in keep]
    basis = [basis[r] for r in keep]
    # Phase 2: reduced costs of b.y against the current basis.
    obj = list(b) + [ZERO]
    for r, bv in enumerate(basis):
        f = obj[bv]
        if f:
            obj = [o - f * t for o, t in zip(obj, T[r])]
    if not _run(T, basis, m, obj):
        raise Infeasible("dual unbounded: constraints are inconsistent")
    return sorted(basis)


def solve_lp(c, A, b):
    """Minimise c.x subject to A x <= b with x free.

    Returns (x, objective). When the feasible set has a vertex the returned
    point is one. Raises Infeasible or Unbounded.
    """
    c, A, b = qvec(c), qmat(A), qvec(b)
    n = len(c)
    if not A:
        if any(c):
            raise Unbounded("no constraints")
        return [ZERO] * n, ZERO
    basis = _dual_basis(c, A, b)
    if basis is None:
        # Dual infeasible: primal is infeasible or unbounded; test feasibility.
        if _dual_basis([ZERO] * n, A, b) is None:
            raise Infeasible("constraints are inconsistent")
        raise Unbounded("objective unbounded below")
    x = solve_particular([A[i] for i in basis], [b[i] for i in basis])
    return x, dot(c, x)


def tight_rows(A, b, x) -> tuple:
    return tuple(i for i, (row, bi) in enumerate(zip(A, b)) if dot(row, x) == bi)


def simplex_solve(lp: LPInstance, theta) -> VertexSolution:
    """Exact optimal vertex of `lp` at parameter value `theta`."""
    rhs = lp.rhs(theta)
    x, obj = solve_lp(lp.c, lp.G, rhs)
    tight = tight_rows(lp.G, rhs, x)
    if rank([lp.G[i] for i in tight]) < lp.n_vars:
        raise LPError("feasible set has no vertex (it contains a line)")
    return VertexSolution(x=x, objective=obj, tight_rows=tight)


def maximize(c, A, b):
    x, obj = solve_lp([-q(v) for v in c], A, b)
    return x, -obj
