"""Multiparametric LP: split parameter space into regions with affine optimizers.

For min c.x s.t. G x <= w + F theta, the algorithm samples a point of the
current region, solves the LP there, turns the tight constraints into an
affine optimizer x(theta) = E theta + e, keeps the region where every other
constraint stays satisfied, and recurses on the complement cells.
"""
from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field

from .model import KernelKind
from .polyhedra import EmptyRegion, Region, chebyshev, maximize_affine, minimize_affine, remove_redundant
from .rational import Q, ZERO, dot, fmt, q, qmat, qvec, rref
from .simplex import Infeasible, LPInstance, simplex_solve
from .tiling import build_tiling_lp, parameter_region

DEFAULT_RETRIES = 32


class DegenerateSamplingExhausted(RuntimeError):
    pass


@dataclass
class AffineOptimizer:
    """x(theta) = E theta + e."""
    E: list
    e: list

    def __post_init__(self):
        self.E = qmat(self.E)
        self.e = qvec(self.e)

    def __call__(self, theta) -> list:
        theta = qvec(theta)
        return [dot(row, theta) + ei for row, ei in zip(self.E, self.e)]

    def scaled(self, f) -> "AffineOptimizer":
        f = q(f)
        return AffineOptimizer([[x * f for x in row] for row in self.E], [x * f for x in self.e])

    def to_json(self) -> dict:
        return {"E": [[fmt(x) for x in row] for row in self.E], "e": [fmt(x) for x in self.e]}

    @classmethod
    def from_json(cls, d: dict) -> "AffineOptimizer":
        return cls(d["E"], d["e"])


@dataclass
class Piece:
    region: Region
    optimizer: AffineOptimizer


@dataclass
class Partition:
    pieces: list
    parent: Region | None = None
    kind: KernelKind = KernelKind.CONV

    def __len__(self):
        return len(self.pieces)

    def locate(self, theta) -> list:
        """Indices of pieces whose (closed) region contains theta."""
        return [i for i, pc in enumerate(self.pieces) if pc.region.contains(theta)]

    def to_json(self) -> str:
        out = []
        for pc in self.pieces:
            coeffs, const = log_cost_formula(pc.optimizer)
            out.append({
                "kind": self.kind.value,
                "region": pc.region.to_json(),
                "optimizer": pc.optimizer.to_json(),
                "cost_formula": {"coeffs": [fmt(x) for x in coeffs], "const": fmt(const)},
            })
        return json.dumps(out, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "Partition":
        data = json.loads(text)
        if not isinstance(data, list):
            raise ValueError("partition file must hold a JSON array")
        kinds = {d.get("kind", "conv") for d in data}
        if len(kinds) > 1:
            raise ValueError("mixed kernel kinds in one partition file")
        kind = KernelKind(kinds.pop()) if kinds else KernelKind.CONV
        pieces = []
        for d in data:
            A = d["region"]["A"]
            dim = len(d["optimizer"]["E"][0]) if d["optimizer"]["E"] else len(A[0])
            pieces.append(Piece(Region(qmat(A), qvec(d["region"]["b"]), dim),
                                AffineOptimizer.from_json(d["optimizer"])))
        return cls(pieces, None, kind)


def child_seed(seed, index: int) -> int:
    """Seed of the index-th complement cell, independent of traversal order."""
    h = hashlib.sha256(f"{seed}/{index}".encode()).digest()
    return int.from_bytes(h[:8], "big")


def sample_point(region: Region, rng: random.Random, resolution: int = 1000):
    """Chebyshev centre plus a random rational offset of at most half the radius."""
    ch = chebyshev(region)
    if ch is None:
        raise EmptyRegion("region is empty")
    center, rho = ch
    if rho <= 0:
        raise EmptyRegion("region is not full-dimensional")
    half = rho / 2
    return [c + half * Q(rng.randint(-resolution + 1, resolution - 1), resolution) for c in center]


def optimizer_from_tight(lp: LPInstance, tight) -> AffineOptimizer | None:
    """Affine optimizer from the tight rows, or None if they pin down theta."""
    n, d = lp.n_vars, lp.n_params
    aug = [list(lp.G[i]) + [-f for f in lp.F[i]] + [lp.w[i]] for i in tight]
    red, pivots = rref(aug)
    if len(pivots) < n or any(p >= n for p in pivots):
        # a reduced row with zero x-part constrains theta itself
        return None
    E, e = [None] * n, [None] * n
    for row, col in zip(red, pivots):
        E[col] = [-x for x in row[n:n + d]]
        e[col] = row[-1]
    return AffineOptimizer(E, e)


def critical_rows(lp: LPInstance, opt: AffineOptimizer, rows) -> tuple:
    """G_i x(theta) <= w_i + F_i theta rewritten as a_i . theta <= b_i."""
    A, b = [], []
    for i in rows:
        g = lp.G[i]
        a = [dot(g, [opt.E[j][t] for j in range(lp.n_vars)]) - lp.F[i][t] for t in range(lp.n_params)]
        A.append(a)
        b.append(lp.w[i] - dot(g, opt.e))
    return A, b


def _solve_cell(lp: LPInstance, region: Region, seed, retries: int):
    rng = random.Random(seed)
    for _ in range(retries):
        theta0 = sample_point(region, rng)
        sol = simplex_solve(lp, theta0)
        opt = optimizer_from_tight(lp, sol.tight_rows)
        if opt is not None:
            return sol, opt
    raise DegenerateSamplingExhausted(f"{retries} samples all hit a degenerate point")


def partition_parameter_space(lp: LPInstance, parent: Region, rng_seed=0,
                              retries: int = DEFAULT_RETRIES, kind=KernelKind.CONV) -> Partition:
    """Explore `parent` depth first; identical seeds give identical partitions."""
    pieces = []
    stack = [(parent.normalized(), rng_seed)]
    while stack:
        region, seed = stack.pop()
        ch = chebyshev(region)
        if ch is None or ch[1] <= 0:
            continue
        sol, opt = _solve_cell(lp, region, seed, retries)
        slack = [i for i in range(lp.n_rows) if i not in set(sol.tight_rows)]
        A, b = critical_rows(lp, opt, slack)
        full = region.with_rows(A, b).normalized()
        # rows from the enclosing cell are protected so duplicates keep their old copy
        old_keys = {tuple(a) + (bi,) for a, bi in zip(region.A, region.b)}
        protect = [i for i, (a, bi) in enumerate(zip(full.A, full.b)) if tuple(a) + (bi,) in old_keys]
        reduced, kept = remove_redundant(full, protect=protect)
        pieces.append(Piece(reduced, opt))
        new_rows = [i for i in kept if i not in set(protect)]
        cells = []
        for idx, i in enumerate(new_rows):
            flips_A = [full.A[j] for j in new_rows[:idx]] + [[-x for x in full.A[i]]]
            flips_b = [full.b[j] for j in new_rows[:idx]] + [-full.b[i]]
            cells.append((region.with_rows(flips_A, flips_b), child_seed(seed, idx)))
        stack.extend(reversed(cells))
    return Partition(pieces, parent, kind)


# Cost and bounds in log form ------------------------------------------------

# theta order: B, C, K, W, H, R, S, sigma_w, sigma_h
_LOG_BOUNDS = {
    1: ([1, 0, 1, 1, 1, 0, 0, 0, 0], 0),
    2: ([1, 1, 0, 1, 1, 0, 0, 1, 1], 0),
    3: ([0, 1, 1, 0, 0, 1, 1, 0, 0], 0),
    4: ([1, 1, 1, 1, 1, 1, 1, 0, 0], -1),
    5: ([1, 1, 1, 1, 1, Q(1, 2), Q(1, 2), Q(1, 2), Q(1, 2)], Q(-1, 2)),
}


def bound_indices(kind: KernelKind) -> tuple:
    return (1, 2, 4) if KernelKind(kind) is KernelKind.POOL else (1, 2, 3, 4, 5)


def log_bound(i: int) -> tuple:
    """(coeffs, const) of log_M of the i-th lower-bound term."""
    coeffs, const = _LOG_BOUNDS[i]
    return qvec(coeffs), q(const)


def log_cost_formula(opt: AffineOptimizer) -> tuple:
    """log_M of F*M/prod(b): sum of the seven loop-bound logs + 1 - sum x(theta)."""
    d = len(opt.E[0]) if opt.E else 9
    coeffs = [Q(1) if t < 7 else ZERO for t in range(d)]
    for row in opt.E:
        coeffs = [c - x for c, x in zip(coeffs, row)]
    return coeffs, Q(1) - sum(opt.e, ZERO)


@dataclass
class GapEntry:
    region: int
    bound: int
    max_gap: object  # None when the bound never dominates above M in the region
    min_gap: object

    def as_dict(self) -> dict:
        return {"region": self.region, "bound": self.bound,
                "max_gap": None if self.max_gap is None else fmt(self.max_gap),
                "min_gap": fmt(self.min_gap)}


@dataclass
class VerificationReport:
    entries: list = field(default_factory=list)
    n_regions: int = 0

    @property
    def failures(self) -> list:
        return [e for e in self.entries
                if (e.max_gap is not None and e.max_gap != 0) or e.min_gap < 0]

    @property
    def ok(self) -> bool:
        return not self.failures

    @property
    def worst_max_gap(self):
        gaps = [e.max_gap for e in self.entries if e.max_gap is not None]
        return max(gaps) if gaps else None

    @property
    def smallest_min_gap(self):
        return min((e.min_gap for e in self.entries), default=None)

    def as_dict(self) -> dict:
        w, s = self.worst_max_gap, self.smallest_min_gap
        return {
            "ok": self.ok,
            "regions": self.n_regions,
            "checks": len(self.entries),
            "dominated_checks": sum(e.max_gap is not None for e in self.entries),
            "worst_max_gap": None if w is None else fmt(w),
            "smallest_min_gap": None if s is None else fmt(s),
            "failures": [e.as_dict() for e in self.failures],
        }


def verify_attainability(partition: Partition, kind=None) -> VerificationReport:
    """Compare each region's log-cost against every lower-bound term.

    max gap: largest cost - L_i over the part of the region where L_i is the
    dominant term and at least M (expected 0). min gap: smallest cost - L_i
    over the whole region (expected >= 0).
    """
    kind = KernelKind(kind or partition.kind)
    idx = bound_indices(kind)
    report = VerificationReport(n_regions=len(partition))
    for r, pc in enumerate(partition.pieces):
        cost, cost0 = log_cost_formula(pc.optimizer)
        for i in idx:
            li, li0 = log_bound(i)
            diff = [a - b for a, b in zip(cost, li)]
            diff0 = cost0 - li0
            min_gap, _ = minimize_affine(diff, diff0, pc.region)
            # L_i >= L_j for all j, and L_i >= 1 (bound at least M)
            extra_A, extra_b = [], []
            for j in idx:
                if j != i:
                    lj, lj0 = log_bound(j)
                    extra_A.append([a - b for a, b in zip(lj, li)])
                    extra_b.append(li0 - lj0)
            extra_A.append([-a for a in li])
            extra_b.append(li0 - 1)
            try:
                max_gap, _ = maximize_affine(diff, diff0, pc.region.with_rows(extra_A, extra_b))
            except Infeasible:
                max_gap = None
            report.entries.append(GapEntry(r, i, max_gap, min_gap))
    return report


def cnn_partition(kind=KernelKind.CONV, seed=0, theta_max=8, retries: int = DEFAULT_RETRIES) -> Partition:
    """Partition of the valid-parameter box for the tiling LP."""
    kind = KernelKind(kind)
    return partition_parameter_space(build_tiling_lp(kind), parameter_region(theta_max), seed,
                                     retries=retries, kind=kind)
