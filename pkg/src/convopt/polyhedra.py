"""Exact polyhedra {theta : A theta <= b} in parameter space."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .rational import Q, ZERO, dot, fmt, q, qmat, qvec
from .simplex import Infeasible, Unbounded, maximize, solve_lp


class EmptyRegion(ValueError):
    pass


def normalize_row(a, b):
    """Scale (a, b) to primitive integers; rows that differ by a positive factor coincide."""
    vals = list(a) + [b]
    den = math.lcm(*(int(v.denominator) for v in vals))
    ints = [int(v * den) for v in vals]
    g = math.gcd(*ints)
    if g > 1:
        ints = [v // g for v in ints]
    return [Q(v) for v in ints[:-1]], Q(ints[-1])


@dataclass
class Region:
    A: list
    b: list
    dim: int

    def __post_init__(self):
        self.A = qmat(self.A)
        self.b = qvec(self.b)
        if len(self.A) != len(self.b):
            raise ValueError("A and b row counts differ")
        if any(len(row) != self.dim for row in self.A):
            raise ValueError("row width does not match dim")

    @classmethod
    def box(cls, dim: int, lo=0, hi=1) -> "Region":
        A, b = [], []
        for i in range(dim):
            A.append([Q(1) if j == i else ZERO for j in range(dim)])
            b.append(q(hi))
            A.append([Q(-1) if j == i else ZERO for j in range(dim)])
            b.append(-q(lo))
        return cls(A, b, dim)

    def __len__(self):
        return len(self.b)

    def contains(self, theta, strict: bool = False) -> bool:
        theta = qvec(theta)
        if strict:
            return all(dot(a, theta) < bi for a, bi in zip(self.A, self.b))
        return all(dot(a, theta) <= bi for a, bi in zip(self.A, self.b))

    def tight_at(self, theta) -> list:
        theta = qvec(theta)
        return [i for i, (a, bi) in enumerate(zip(self.A, self.b)) if dot(a, theta) == bi]

    def with_rows(self, A, b) -> "Region":
        return Region(self.A + qmat(A), self.b + qvec(b), self.dim)

    def normalized(self) -> "Region":
        A, b, seen = [], [], set()
        for a, bi in zip(self.A, self.b):
            if not any(a):
                if bi < 0:
                    return Region([[ZERO] * self.dim], [Q(-1)], self.dim)
                continue
            na, nb = normalize_row(a, bi)
            key = tuple(na) + (nb,)
            if key not in seen:
                seen.add(key)
                A.append(na)
                b.append(nb)
        return Region(A, b, self.dim)

    def to_json(self) -> dict:
        return {"A": [[fmt(x) for x in row] for row in self.A], "b": [fmt(x) for x in self.b]}

    @classmethod
    def from_json(cls, d: dict) -> "Region":
        A = qmat(d["A"])
        dim = d.get("dim", len(A[0]) if A else 0)
        return cls(A, qvec(d["b"]), dim)


def chebyshev(r: Region, radius_cap=1):
    """Centre and radius of the largest inf-norm ball inside r.

    Uses a_i.x + rho*|a_i|_1 <= b_i so everything stays rational. The radius
    is capped at `radius_cap` to keep unbounded regions well posed. Returns
    None if r is empty.
    """
    n = r.dim
    A = [list(a) + [sum(abs(x) for x in a)] for a in r.A]
    b = list(r.b)
    A.append([ZERO] * n + [Q(1)])
    b.append(q(radius_cap))
    A.append([ZERO] * n + [Q(-1)])  # rho >= 0 makes emptiness a phase-1 answer
    b.append(ZERO)
    try:
        x, _ = maximize([ZERO] * n + [Q(1)], A, b)
    except Infeasible:
        return None
    return x[:n], x[n]


def region_is_empty(r: Region) -> bool:
    return chebyshev(r) is None


def region_is_full_dim(r: Region) -> bool:
    ch = chebyshev(r)
    return ch is not None and ch[1] > 0


def sample_interior(r: Region, rng: random.Random | int | None = None, resolution: int = 10**6):
    """Random rational point strictly inside r, near its Chebyshev centre."""
    if not isinstance(rng, random.Random):
        rng = random.Random(rng)
    ch = chebyshev(r)
    if ch is None:
        raise EmptyRegion("region is empty")
    center, rho = ch
    if rho <= 0:
        raise EmptyRegion("region is not full-dimensional")
    half = rho / 2
    return [c + half * Q(rng.randint(-resolution + 1, resolution - 1), resolution) for c in center]


def remove_redundant(r: Region, protect=()) -> tuple:
    """Drop rows implied by the others (one LP per row).

    Returns (reduced region, kept original row indices). Rows listed in
    `protect` are examined last so that, among duplicates, they survive.
    """
    order = [i for i in range(len(r)) if i not in set(protect)] + [i for i in protect]
    alive = set(range(len(r)))
    for i in order:
        others = [j for j in sorted(alive) if j != i]
        A = [r.A[j] for j in others] + [r.A[i]]
        b = [r.b[j] for j in others] + [r.b[i] + 1]
        try:
            _, best = maximize(r.A[i], A, b)
        except Infeasible:
            # the whole region is empty; nothing is meaningful any more
            return Region([], [], r.dim), []
        except Unbounded:  # pragma: no cover - the relaxed row bounds it
            continue
        if best <= r.b[i]:
            alive.discard(i)
    kept = sorted(alive)
    return Region([r.A[i] for i in kept], [r.b[i] for i in kept], r.dim), kept


def minimize_affine(coeffs, const, r: Region):
    """min coeffs.theta + const over r, with its argmin. Raises on empty r."""
    x, val = solve_lp(qvec(coeffs), r.A, r.b)
    return val + q(const), x


def maximize_affine(coeffs, const, r: Region):
    x, val = maximize(qvec(coeffs), r.A, r.b)
    return val + q(const), x
