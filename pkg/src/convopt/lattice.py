"""Subgroups of Z^d, their sums and intersections, and ranks under projections.

Only ranks over Q matter for the exponent inequalities, so a subgroup is
identified with its saturation (its Q-span intersected with Z^d). Two
subgroups of finite index in one another therefore compare equal. The
canonical basis is the Hermite normal form of the saturated lattice.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

from .rational import rank as q_rank


class ClosureTooLarge(RuntimeError):
    pass


def hnf_with_transform(rows):
    """Row-style Hermite normal form.

    Returns (H, U, r) with U @ A == H, U unimodular, the first r rows of H
    nonzero with positive pivots, entries above each pivot reduced into
    [0, pivot), and the remaining rows zero.
    """
    H = [list(map(int, row)) for row in rows]
    m = len(H)
    d = len(H[0]) if m else 0
    U = [[int(i == j) for j in range(m)] for i in range(m)]

    def sub(i, j, f):
        H[i] = [a - f * b for a, b in zip(H[i], H[j])]
        U[i] = [a - f * b for a, b in zip(U[i], U[j])]

    r = 0
    for col in range(d):
        if r == m:
            break
        while True:
            nz = [i for i in range(r, m) if H[i][col]]
            if not nz:
                break
            piv = min(nz, key=lambda i: abs(H[i][col]))
            H[r], H[piv] = H[piv], H[r]
            U[r], U[piv] = U[piv], U[r]
            clean = True
            for i in range(r + 1, m):
                if H[i][col]:
                    sub(i, r, H[i][col] // H[r][col])
                    clean = clean and H[i][col] == 0
            if clean:
                break
        if not H[r][col]:
            continue
        if H[r][col] < 0:
            H[r] = [-a for a in H[r]]
            U[r] = [-a for a in U[r]]
        for i in range(r):
            if H[i][col]:
                sub(i, r, H[i][col] // H[r][col])
        r += 1
    return H, U, r


def integer_kernel(rows, d: int) -> list:
    """Basis of {x in Z^d : row . x = 0 for every row}."""
    rows = [list(r) for r in rows]
    if not rows:
        return [[int(i == j) for j in range(d)] for i in range(d)]
    transposed = [[rows[i][j] for i in range(len(rows))] for j in range(d)]
    _, U, r = hnf_with_transform(transposed)
    return U[r:]


def _canonical(rows, d: int) -> tuple:
    rows = [r for r in rows if any(r)]
    if not rows:
        return ()
    # saturation = kernel of the kernel
    sat = integer_kernel(integer_kernel(rows, d), d)
    H, _, r = hnf_with_transform(sat)
    return tuple(tuple(row) for row in H[:r])


@dataclass(frozen=True)
class Subgroup:
    dim: int
    basis: tuple

    @classmethod
    def from_generators(cls, generators, dim: int | None = None) -> "Subgroup":
        generators = [tuple(int(x) for x in g) for g in generators]
        if dim is None:
            if not generators:
                raise ValueError("dimension needed for an empty generator list")
            dim = len(generators[0])
        return cls(dim, _canonical(generators, dim))

    @classmethod
    def zero(cls, dim: int) -> "Subgroup":
        return cls(dim, ())

    @classmethod
    def axes(cls, dim: int, *indices: int) -> "Subgroup":
        return cls.from_generators([[int(i == j) for j in range(dim)] for i in indices], dim)

    @property
    def rank(self) -> int:
        return len(self.basis)

    def is_zero(self) -> bool:
        return not self.basis

    def __add__(self, other: "Subgroup") -> "Subgroup":
        self._check(other)
        return Subgroup.from_generators(self.basis + other.basis, self.dim)

    def __and__(self, other: "Subgroup") -> "Subgroup":
        self._check(other)
        normals = integer_kernel(self.basis, self.dim) if self.basis else None
        other_normals = integer_kernel(other.basis, other.dim) if other.basis else None
        if normals is None or other_normals is None:
            return Subgroup.zero(self.dim)
        meet = integer_kernel(normals + other_normals, self.dim)
        return Subgroup.from_generators(meet, self.dim) if meet else Subgroup.zero(self.dim)

    def contains(self, other: "Subgroup") -> bool:
        return self + other == self

    def _check(self, other):
        if self.dim != other.dim:
            raise ValueError(f"ambient dimensions differ: {self.dim} vs {other.dim}")

    def __repr__(self):
        if not self.basis:
            return f"Subgroup(0 in Z^{self.dim})"
        return f"Subgroup({[list(b) for b in self.basis]})"


@dataclass(frozen=True)
class Projection:
    """Linear index map Z^d -> Z^m given by an integer m x d matrix."""
    matrix: tuple
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "matrix", tuple(tuple(int(x) for x in row) for row in self.matrix))

    @property
    def dim(self) -> int:
        return len(self.matrix[0])

    def apply(self, v) -> tuple:
        return tuple(sum(a * x for a, x in zip(row, v)) for row in self.matrix)

    def kernel(self) -> Subgroup:
        gens = integer_kernel(self.matrix, self.dim)
        return Subgroup.from_generators(gens, self.dim) if gens else Subgroup.zero(self.dim)


def subgroup_rank(h: Subgroup) -> int:
    return h.rank


def image_rank(phi: Projection, h: Subgroup) -> int:
    if h.dim != phi.dim:
        raise ValueError("projection and subgroup live in different spaces")
    return q_rank([phi.apply(v) for v in h.basis])


def lattice_closure(generators, cap: int = 10_000) -> list:
    """Closure of generators and {0} under pairwise sum and intersection."""
    generators = list(generators)
    if not generators:
        return []
    dim = generators[0].dim
    members = []
    seen = set()
    for g in generators + [Subgroup.zero(dim)]:
        if g.dim != dim:
            raise ValueError("generators live in different spaces")
        if g not in seen:
            seen.add(g)
            members.append(g)
    done = 0
    while done < len(members):
        # pair every new member with everything before it
        end = len(members)
        for i in range(done, end):
            for j in range(i):
                for h in (members[i] + members[j], members[i] & members[j]):
                    if h not in seen:
                        seen.add(h)
                        members.append(h)
                        if len(members) > cap:
                            raise ClosureTooLarge(f"closure exceeds {cap} subgroups")
        done = end
    return members


def sums_of(lattices) -> list:
    """All sums H_1 + ... + H_n with H_i drawn from lattices[i], deduplicated."""
    out, seen = [], set()
    for combo in itertools.product(*lattices):
        h = combo[0]
        for g in combo[1:]:
            h = h + g
        if h not in seen:
            seen.add(h)
            out.append(h)
    return out


def subgroups_to_json(subgroups) -> str:
    return json.dumps([[list(r) for r in h.basis] for h in subgroups])
