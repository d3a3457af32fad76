"""Communication lower bounds for convolution, pooling and matmul.

Also builds the exponent linear program behind the F/M term: a list of
subgroups of the iteration lattice, one rank inequality per subgroup, and
an exact minimisation of the exponent sum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .lattice import Projection, Subgroup, image_rank, lattice_closure
from .model import CacheModel, ConvParams, KernelKind, as_cache, total_flops
from .rational import Q, ZERO, q
from .simplex import Infeasible, solve_lp

TERM_NAMES = ("out_size", "image_proxy", "filter_size", "hbl_term", "small_filter_term")

# Iteration coordinates of the seven-loop nest.
CNN_INDICES = ("b", "c", "k", "w", "h", "r", "s")

# Groups of loop indices that never share a subscript with another group.
CNN_INDEX_GROUPS = (("k",), ("h", "s"), ("w", "r"), ("c",), ("b",))


def _floor_sqrt(x: Fraction) -> int:
    """floor(sqrt(x)) for a nonnegative rational."""
    return math.isqrt(x.numerator * x.denominator) // x.denominator


@dataclass(frozen=True)
class BoundBreakdown:
    """The lower-bound terms at one (layer, M); absent terms are None.

    `terms` are word counts rounded down. `squares` holds the exact squared
    value of each term as a Fraction; dominance is decided on those.
    """
    terms: tuple
    squares: tuple
    max_term: int
    dominant: int  # 1-based index into TERM_NAMES
    kind: KernelKind

    @property
    def dominant_name(self) -> str:
        return TERM_NAMES[self.dominant - 1]

    def as_dict(self) -> dict:
        d = {name: t for name, t in zip(TERM_NAMES, self.terms)}
        d.update(max_term=self.max_term, dominant=self.dominant,
                 dominant_name=self.dominant_name, kind=self.kind.value)
        return d


def lower_bound(p: ConvParams, m: CacheModel | int) -> BoundBreakdown:
    M = as_cache(m).M
    bkwh = p.B * p.K * p.W * p.H
    bcwh = p.B * p.C * p.W * p.H
    F = total_flops(p)
    exact = [
        Fraction(bkwh),
        Fraction(p.sigma_w * p.sigma_h * bcwh),
        None if p.is_pool else Fraction(p.C * p.K * p.R * p.S),
        Fraction(F, M),
        None,
    ]
    squares = [None if v is None else v * v for v in exact]
    if not p.is_pool:
        bckwh = bcwh * p.K
        squares[4] = Fraction(bckwh * bckwh * p.R * p.S * p.sigma_w * p.sigma_h, M)
    terms = []
    for i, sq in enumerate(squares):
        if sq is None:
            terms.append(None)
        elif i < 4:
            terms.append(math.floor(exact[i]))
        else:
            terms.append(_floor_sqrt(sq))
    # first index wins ties
    dominant = max((i for i, s in enumerate(squares) if s is not None),
                   key=lambda i: (squares[i], -i))
    return BoundBreakdown(tuple(terms), tuple(squares), terms[dominant], dominant + 1, p.kind)


def matmul_lower_bound(n: int, k: int, m: CacheModel | int) -> int:
    """max(n^2, floor(n^2 k / sqrt(M))) for n x n times n x k matmul."""
    M = as_cache(m).M
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    return max(n * n, _floor_sqrt(Fraction(n ** 4 * k * k, M)))


def max_ops_per_round(p: ConvParams, m: CacheModel | int) -> int:
    """Largest number of iterations computable from O(M) words of data."""
    M = as_cache(m).M
    if p.is_pool:
        return M * M
    small = math.isqrt(p.R * p.S * M ** 3 // (p.sigma_w * p.sigma_h))
    return min(M * M, small)


def round_bound(p: ConvParams, m: CacheModel | int) -> int:
    """M * floor(F / G): words moved given at most G iterations per round."""
    M = as_cache(m).M
    return M * (total_flops(p) // max_ops_per_round(p, M))


# Projections and subgroups -----------------------------------------------

def _axis(name):
    return [int(i == name) for i in CNN_INDICES]


def cnn_projections(sigma_w: int = 1, sigma_h: int = 1, kind=KernelKind.CONV) -> list:
    """Subscript maps of Out, Image (and Filter) over (b, c, k, w, h, r, s)."""
    b, c, k, w, h, r, s = (_axis(n) for n in CNN_INDICES)
    r_plus_w = [x + sigma_w * y for x, y in zip(r, w)]
    s_plus_h = [x + sigma_h * y for x, y in zip(s, h)]
    projs = [
        Projection((b, k, w, h), "Out"),
        Projection((b, c, r_plus_w, s_plus_h), "Image"),
    ]
    if kind is not KernelKind.POOL:
        projs.append(Projection((c, k, r, s), "Filter"))
    return projs


def generator_sets(projections, groups=CNN_INDEX_GROUPS, indices=CNN_INDICES) -> list:
    """Per index group, the nonzero pieces Ker(phi_j) & span(group).

    Coordinate axes come first (in index order), then mixed subgroups.
    Groups whose pieces are all zero are dropped.
    """
    d = len(indices)
    kernels = [phi.kernel() for phi in projections]
    sets = []
    for group in groups:
        span = Subgroup.axes(d, *(indices.index(n) for n in group))
        pieces = []
        for ker in kernels:
            piece = ker & span
            if not piece.is_zero() and piece not in pieces:
                pieces.append(piece)

        def order(h):
            is_axis = h.rank == 1 and sum(1 for x in h.basis[0] if x) == 1
            return (not is_axis, h.rank, [-abs(x) for x in h.basis[0]])

        pieces.sort(key=order)
        if pieces:
            sets.append(pieces)
    return sets


@dataclass(frozen=True)
class LabeledSubgroup:
    label: str
    subgroup: Subgroup


def exponent_subgroups(projections, groups=CNN_INDEX_GROUPS, indices=CNN_INDICES) -> list:
    """Nonzero members of lattice(C_i) for every generator set C_i, labelled C_{i,j}."""
    out = []
    for i, gens in enumerate(generator_sets(projections, groups, indices), start=1):
        members = [h for h in lattice_closure(gens) if not h.is_zero()]
        for j, h in enumerate(members, start=1):
            out.append(LabeledSubgroup(f"C_{{{i},{j}}}", h))
    return out


def cnn_subgroups(sigma_w: int = 1, sigma_h: int = 1) -> list:
    return exponent_subgroups(cnn_projections(sigma_w, sigma_h))


def pooling_subgroups(sigma_w: int = 1, sigma_h: int = 1) -> list:
    return exponent_subgroups(cnn_projections(sigma_w, sigma_h, KernelKind.POOL))


def rank_row(projections, h: Subgroup) -> tuple:
    return (h.rank,) + tuple(image_rank(phi, h) for phi in projections)


# Exponent LP -------------------------------------------------------------

@dataclass
class ExponentSolution:
    s: tuple
    total: object
    constraints_used: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.s)


def exponent_constraints(projections, subgroups) -> list:
    """(rank H, (rank phi_i H)_i) per subgroup, trivial 0 <= 0 rows dropped."""
    rows = []
    for h in subgroups:
        h = h.subgroup if isinstance(h, LabeledSubgroup) else h
        row = rank_row(projections, h)
        if row[0] == 0 and not any(row[1:]):
            continue
        rows.append((row[0], row[1:]))
    return rows


def _exponent_lp(constraints, n):
    A, b = [], []
    for lhs, coeffs in constraints:
        A.append([-q(c) for c in coeffs])
        b.append(-q(lhs))
    for i in range(n):
        A.append([Q(-1) if j == i else ZERO for j in range(n)])
        b.append(ZERO)
    return A, b


def hbl_exponents(projections, subgroups) -> ExponentSolution:
    """Minimise sum(s) subject to rank(H) <= sum_i s_i rank(phi_i(H))."""
    if not projections or not subgroups:
        raise ValueError("need at least one projection and one subgroup")
    n = len(projections)
    cons = exponent_constraints(projections, subgroups)
    A, b = _exponent_lp(cons, n)
    x, total = solve_lp([1] * n, A, b)
    return ExponentSolution(tuple(x), total, cons)


def implied(constraints, candidate, n: int) -> bool:
    """Does the system `constraints` (with s >= 0) imply `candidate`?"""
    lhs, coeffs = candidate
    A, b = _exponent_lp(constraints, n)
    try:
        _, best = solve_lp([q(c) for c in coeffs], A, b)
    except Infeasible:
        return True
    return best >= lhs


def reduce_constraints(constraints, n: int) -> list:
    """Drop duplicate and implied inequalities, keeping first occurrences."""
    kept = []
    for con in constraints:
        if con not in kept:
            kept.append(con)
    i = 0
    while i < len(kept):
        rest = kept[:i] + kept[i + 1:]
        if rest and implied(rest, kept[i], n):
            kept = rest
        else:
            i += 1
    return kept


def equivalent(system_a, system_b, n: int) -> bool:
    return (all(implied(system_a, c, n) for c in system_b)
            and all(implied(system_b, c, n) for c in system_a))


def hbl_holds(projections, points, s) -> bool:
    """Check |V| <= prod |phi_i(V)|^{s_i} exactly for a finite point set V."""
    V = set(map(tuple, points))
    if not V:
        return True
    fr = [Fraction(int(q(x).numerator), int(q(x).denominator)) for x in s]
    den = math.lcm(*(f.denominator for f in fr))
    lhs = len(V) ** den
    rhs = 1
    for phi, f in zip(projections, fr):
        rhs *= len({phi.apply(v) for v in V}) ** (f.numerator * den // f.denominator)
    return lhs <= rhs
