"""Tile-size linear program over the nine-loop nest and its integer rounding.

Variables are l_x = log_M(b_x) for x in (b, c, k, w, h, r', r'', s', s'');
parameters are theta = log_M of (B, C, K, W, H, R, S, sigma_w, sigma_h).
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, fields
from fractions import Fraction

from .model import CacheModel, ConvParams, KernelKind, as_cache, total_flops
from .polyhedra import Region
from .rational import Q, ZERO, q
from .simplex import LPInstance, maximize, simplex_solve

VARS = ("b", "c", "k", "w", "h", "r1", "r2", "s1", "s2")
THETA_NAMES = ("log_B", "log_C", "log_K", "log_W", "log_H",
               "log_R", "log_S", "log_sigma_w", "log_sigma_h")
_V = {name: i for i, name in enumerate(VARS)}
_T = {name: i for i, name in enumerate(("B", "C", "K", "W", "H", "R", "S", "sw", "sh"))}

# Footprint of the four expanded Image terms: b c {w|r'} {h|s'} r'' s''.
IMAGE_TERMS = (("w", "h"), ("w", "s1"), ("r1", "h"), ("r1", "s1"))
OUT_VARS = ("b", "k", "w", "h")
FILTER_VARS = ("c", "k", "r1", "r2", "s1", "s2")

IMAGE_SLACK = 4  # Tiling admits an Image footprint up to 4M


@dataclass(frozen=True)
class Tiling:
    b_b: int
    b_c: int
    b_k: int
    b_w: int
    b_h: int
    b_r1: int
    b_r2: int
    b_s1: int
    b_s2: int

    @classmethod
    def ones(cls) -> "Tiling":
        return cls(*([1] * 9))

    @classmethod
    def full(cls, p: ConvParams) -> "Tiling":
        return cls(*p.lifted_bounds())

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, f.name) for f in fields(self))

    def product(self) -> int:
        return math.prod(self.as_tuple())

    def __getitem__(self, var: str) -> int:
        return getattr(self, "b_" + var)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "Tiling":
        return cls(**{f.name: int(d[f.name]) for f in fields(cls)})


def footprints(t: Tiling, p: ConvParams) -> dict:
    out = t.b_b * t.b_k * t.b_w * t.b_h
    filt = 0 if p.is_pool else t.b_c * t.b_k * t.b_r1 * t.b_r2 * t.b_s1 * t.b_s2
    image = t.b_b * t.b_c * (t.b_w + t.b_r1) * (t.b_h + t.b_s1) * t.b_r2 * t.b_s2
    return {"out": out, "image": image, "filter": filt}


def violations(t: Tiling, p: ConvParams, m: CacheModel | int) -> list:
    """Human-readable list of broken Tiling invariants (empty if feasible)."""
    M = as_cache(m).M
    bad = []
    for var, bound, size in zip(VARS, p.lifted_bounds(), t.as_tuple()):
        if not 1 <= size <= bound:
            bad.append(f"b_{var}={size} outside [1, {bound}]")
    fp = footprints(t, p)
    if fp["out"] > M:
        bad.append(f"Out tile {fp['out']} > M={M}")
    if fp["filter"] > M:
        bad.append(f"Filter tile {fp['filter']} > M={M}")
    if fp["image"] > IMAGE_SLACK * M:
        bad.append(f"Image tile {fp['image']} > {IMAGE_SLACK}M={IMAGE_SLACK * M}")
    return bad


def is_feasible(t: Tiling, p: ConvParams, m) -> bool:
    return not violations(t, p, m)


# LP construction --------------------------------------------------------

def build_tiling_lp(p: ConvParams | KernelKind) -> LPInstance:
    """The nine-variable tiling LP as min c.x s.t. G x <= w + F theta.

    Rows: 9 nonnegativity, 5 loop bounds, 2 stride bounds, 2 filter-extent
    bounds, Out capacity, Filter capacity (convolution only), 4 Image
    capacity rows.
    """
    kind = p.kind if isinstance(p, ConvParams) else KernelKind(p)
    G, w, F, names = [], [], [], []

    def row(lhs, rhs_theta=(), const=0, name=""):
        g = [ZERO] * 9
        for v in lhs:
            g[_V[v]] += 1
        f = [ZERO] * 9
        for coef, t in rhs_theta:
            f[_T[t]] += coef
        G.append(g)
        F.append(f)
        w.append(Q(const))
        names.append(name)

    for v in VARS:
        G.append([Q(-1) if u == v else ZERO for u in VARS])
        F.append([ZERO] * 9)
        w.append(ZERO)
        names.append(f"l_{v} >= 0")
    for v, t in zip(("b", "c", "k", "w", "h"), ("B", "C", "K", "W", "H")):
        row([v], [(1, t)], name=f"l_{v} <= log {t}")
    row(["r2"], [(1, "sw")], name="l_r2 <= log sigma_w")
    row(["s2"], [(1, "sh")], name="l_s2 <= log sigma_h")
    row(["r1"], [(1, "R"), (-1, "sw")], name="l_r1 <= log R - log sigma_w")
    row(["s1"], [(1, "S"), (-1, "sh")], name="l_s1 <= log S - log sigma_h")
    row(OUT_VARS, const=1, name="Out capacity")
    if kind is not KernelKind.POOL:
        row(FILTER_VARS, const=1, name="Filter capacity")
    for x, y in IMAGE_TERMS:
        row(["b", "c", x, y, "r2", "s2"], const=1, name=f"Image capacity ({x},{y})")
    return LPInstance(c=[-1] * 9, G=G, w=w, F=F, theta_names=list(THETA_NAMES), row_names=names)


def parameter_region(theta_max=8) -> Region:
    """Valid log-parameters: theta >= 0, sigma <= R <= sigma*W (same for h), theta <= theta_max."""
    A, b = [], []

    def ineq(coeffs, rhs):
        a = [ZERO] * 9
        for coef, t in coeffs:
            a[_T[t]] += coef
        A.append(a)
        b.append(q(rhs))

    for t in _T:
        ineq([(-1, t)], 0)
    for t in _T:
        ineq([(1, t)], theta_max)
    ineq([(1, "sw"), (-1, "R")], 0)
    ineq([(1, "R"), (-1, "sw"), (-1, "W")], 0)
    ineq([(1, "sh"), (-1, "S")], 0)
    ineq([(1, "S"), (-1, "sh"), (-1, "H")], 0)
    return Region(A, b, 9)


def log_params(p: ConvParams, m: CacheModel | int) -> list:
    """theta for a concrete layer (float logs converted exactly to rationals)."""
    M = as_cache(m).M
    lm = math.log(M)
    vals = (p.B, p.C, p.K, p.W, p.H, p.R, p.S, p.sigma_w, p.sigma_h)
    return [q(math.log(v) / lm) for v in vals]


# Solving and rounding ---------------------------------------------------

def _floor_pow(M: int, l) -> tuple:
    v = M ** float(l)
    return v, max(1, math.floor(v * (1 + 1e-9)))


def _capacity_groups(p: ConvParams):
    groups = [OUT_VARS]
    if not p.is_pool:
        groups.append(FILTER_VARS)
    groups.append(("b", "c", "w", "h", "r1", "s1", "r2", "s2"))
    return groups


def repair(sizes: dict, p: ConvParams, M: int) -> dict:
    """Halve the largest block of a violated capacity row, once per dimension."""
    halved = set()
    while True:
        t = Tiling(**{"b_" + v: sizes[v] for v in VARS})
        bad = [g for g, ok in zip(_capacity_groups(p), _capacity_ok(t, p, M)) if not ok]
        if not bad:
            return sizes
        cands = [v for v in bad[0] if v not in halved and sizes[v] > 1]
        if not cands:
            return {v: 1 for v in VARS}
        v = max(cands, key=lambda u: (sizes[u], -_V[u]))
        sizes[v] = max(1, sizes[v] // 2)
        halved.add(v)


def _capacity_ok(t: Tiling, p: ConvParams, M: int) -> list:
    fp = footprints(t, p)
    ok = [fp["out"] <= M]
    if not p.is_pool:
        ok.append(fp["filter"] <= M)
    ok.append(fp["image"] <= IMAGE_SLACK * M)
    return ok


# Tie-break among optimal vertices: outer blocks first, then filter extents,
# then the stride phases. On AlexNet at M = 1024 this gives b_b = b_k ~ 12.
TIE_BREAK = ("b", "c", "k", "w", "h", "r1", "s1", "s2", "r2")


def lexicographic_optimum(lp: LPInstance, theta, priority=TIE_BREAK):
    """Optimal point that is lexicographically largest in `priority` order."""
    base = simplex_solve(lp, theta)
    A = [list(g) for g in lp.G] + [list(lp.c)]
    b = lp.rhs(theta) + [base.objective]
    x = base.x
    for v in priority:
        i = _V[v]
        x, val = maximize([Q(1) if j == i else ZERO for j in range(lp.n_vars)], A, b)
        A.append([Q(-1) if j == i else ZERO for j in range(lp.n_vars)])
        b.append(-val)
    return x


def lp_log_tiles(p: ConvParams, m: CacheModel | int) -> list:
    """log_M tile sizes at the layer's theta (lexicographic tie-break)."""
    return lexicographic_optimum(build_tiling_lp(p), log_params(p, m))


def _round_candidates(targets: dict, bounds: dict) -> list:
    opts = []
    for v in VARS:
        lo = min(bounds[v], max(1, math.floor(targets[v] * (1 + 1e-9))))
        hi = min(bounds[v], max(1, math.ceil(targets[v] * (1 - 1e-9))))
        opts.append(sorted({lo, hi}, reverse=True))
    return opts


def solve_tiling(p: ConvParams, m: CacheModel | int, fill: bool = True) -> Tiling:
    """Integer tiling from the LP optimum.

    Every floor/ceil combination of the LP block sizes is tried and the
    feasible one with the largest product kept; if none is feasible the
    floors are repaired by halving. With `fill`, blocks are then bumped
    while the tiling stays feasible.
    """
    M = as_cache(m).M
    if M == 1:
        return Tiling.ones()
    logs = lp_log_tiles(p, M)
    bounds = dict(zip(VARS, p.lifted_bounds()))
    targets = {v: M ** float(l) for v, l in zip(VARS, logs)}
    best = None
    for combo in itertools.product(*_round_candidates(targets, bounds)):
        t = Tiling(*combo)
        if best is not None and t.product() <= best.product():
            continue
        if all(_capacity_ok(t, p, M)):
            best = t
    if best is None:
        floors = {v: min(bounds[v], _floor_pow(M, l)[1]) for v, l in zip(VARS, logs)}
        best = Tiling(**{"b_" + v: s for v, s in repair(floors, p, M).items()})
    if fill:
        best = polish(best, p, M)
    return best


def polish(t: Tiling, p: ConvParams, M: int, max_steps: int = 10_000) -> Tiling:
    """Local search on the block product: single +1 moves, then +1/-1 swaps."""
    bounds = p.lifted_bounds()
    cur = list(t.as_tuple())
    for _ in range(max_steps):
        base = math.prod(cur)
        best, best_prod = None, base
        for i in range(9):
            if cur[i] >= bounds[i]:
                continue
            for j in [None] + [j for j in range(9) if j != i and cur[j] > 1]:
                trial = list(cur)
                trial[i] += 1
                if j is not None:
                    trial[j] -= 1
                prod = math.prod(trial)
                if prod > best_prod and all(_capacity_ok(Tiling(*trial), p, M)):
                    best, best_prod = trial, prod
        if best is None:
            break
        cur = best
    return Tiling(*cur)


def tiling_comm_cost(t: Tiling, p: ConvParams, m: CacheModel | int) -> Fraction:
    """F * M / prod(b): outer-tile iterations times M words each."""
    M = as_cache(m).M
    bad = violations(t, p, M)
    if bad:
        raise ValueError("infeasible tiling: " + "; ".join(bad))
    return Fraction(total_flops(p) * M, t.product())
