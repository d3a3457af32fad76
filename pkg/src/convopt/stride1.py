"""Hand-derived optimal tilings for unit-stride convolution.

A decision tree on the relative sizes of the three arrays and M picks a
case; each case names an attainable lower bound (ALB) and a blocked loop
nest that reaches it. Block sizes come out as powers of M, which are
floored to integers and then grown greedily while the tile stays
admissible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .bounds import _floor_sqrt
from .model import CacheModel, ConvParams, ParamError, as_cache, total_flops, validate_params
from .tiling import Tiling


def split2(xbar, ybar, s):
    """Nonnegative (x, y) with x <= xbar, y <= ybar and x + y = s, filling x first."""
    if min(xbar, ybar, s) < 0:
        raise ValueError("split2 needs nonnegative arguments")
    if xbar + ybar < s:
        raise ValueError(f"cannot split {s} into parts bounded by {xbar} and {ybar}")
    x = min(xbar, s)
    return x, s - x


def split3(xbar, ybar, zbar, s):
    """Like split2 with three parts, filled x, then y, then z."""
    if min(xbar, ybar, zbar, s) < 0:
        raise ValueError("split3 needs nonnegative arguments")
    if xbar + ybar + zbar < s:
        raise ValueError(f"cannot split {s} into parts bounded by {xbar}, {ybar}, {zbar}")
    x = min(xbar, s)
    y = min(ybar, s - x)
    return x, y, s - x - y


@dataclass(frozen=True)
class Stride1Result:
    case: str
    alb: int
    tiling: Tiling

    def as_dict(self) -> dict:
        return {"case": self.case, "alb": self.alb, "tiling": self.tiling.to_dict()}


# b, c, k, w, h, r, s block sizes of the seven-loop nest
_DIMS = ("b", "c", "k", "w", "h", "r", "s")


def admissible(blocks: dict, p: ConvParams, M: int) -> bool:
    """Capacity, extent and bound constraints of the seven-loop blocking."""
    b, c, k, w, h, r, s = (blocks[d] for d in _DIMS)
    bounds = dict(zip(_DIMS, (p.B, p.C, p.K, p.W, p.H, p.R, p.S)))
    if any(not 1 <= blocks[d] <= bounds[d] for d in _DIMS):
        return False
    return (k * h * w * b <= M and c * h * w * b <= M and k * r * s * c <= M
            and r <= w and s <= h)


def block_cost(blocks: dict, p: ConvParams, M: int) -> Fraction:
    """Total iterations times M over the iterations per block."""
    return Fraction(total_flops(p) * M, math.prod(blocks[d] for d in _DIMS))


def _choose_case(p: ConvParams, M: int) -> str:
    B, C, K, W, H, R, S = p.B, p.C, p.K, p.W, p.H, p.R, p.S
    img, filt, out = C * H * W * B, K * C * R * S, K * H * W * B
    hwb = H * W * B
    if min(img, filt, out) <= M:
        if img <= M and filt <= M and out <= M:
            return "1.1"
        if img >= M and filt <= M and out <= M:
            return "1.2"
        if img <= M and filt <= M and out >= M:
            return "1.3"
        if img <= M and filt >= M and out <= M:
            return "1.4" if K * C <= M else "1.5"
        if img >= M and filt <= M and out >= M:
            return "1.6"
        if img >= M and filt >= M and out <= M:
            return "1.7" if K >= hwb else "1.8"
        return "1.9" if C >= hwb else "1.10"
    if R * S >= M:
        return "2.1"
    if M * R * S >= hwb * hwb:
        return "2.2.1"
    if min(C, K) ** 2 * R * S >= M:
        return "2.2.2.1"
    return "2.2.2.2"


def _alb(case: str, p: ConvParams, M: int) -> int:
    B, C, K, W, H, R, S = p.B, p.C, p.K, p.W, p.H, p.R, p.S
    hwb = H * W * B
    if case.startswith("1."):
        return max(C * hwb, K * C * R * S, K * hwb)
    if case == "2.1":
        return K * C * hwb * R * S // M
    if case == "2.2.1":
        return K * C * R * S
    if case == "2.2.2.1":
        return _floor_sqrt(Fraction((K * C * hwb) ** 2 * R * S, M))
    return max(K * hwb, C * hwb)


def _log_blocks(case: str, p: ConvParams, M: int) -> dict:
    """Real-valued log_M block sizes prescribed for each case."""
    lm = math.log(M)
    L = {d: math.log(v) / lm for d, v in zip(_DIMS, (p.B, p.C, p.K, p.W, p.H, p.R, p.S))}
    full = dict(L)

    def cap(total, *parts):
        # guard the float image of an exact precondition
        return min(max(total, 0.0), sum(parts))

    if case == "1.1":
        return full
    if case in ("1.2", "1.3"):
        grown = "c" if case == "1.2" else "k"
        d = dict(full, b=0.0)
        d[grown] = min(L[grown], 1 - L["h"] - L["w"])
        return d
    if case == "1.4":
        r, s = split2(L["r"], L["s"], cap(1 - L["k"] - L["c"], L["r"], L["s"]))
        return dict(full, r=r, s=s)
    if case == "1.5":
        k, c = split2(L["k"], L["c"], cap(1 - L["r"] - L["s"], L["k"], L["c"]))
        return dict(full, k=k, c=c)
    if case == "1.6":
        hs, wr = max(L["h"] - L["s"], 0.0), max(L["w"] - L["r"], 0.0)
        t = cap(1 - max(L["c"], L["k"]) - L["r"] - L["s"], L["b"], hs, wr)
        b, dh, dw = split3(L["b"], hs, wr, t)
        return dict(full, b=b, h=L["s"] + dh, w=L["r"] + dw)
    if case in ("1.7", "1.9"):
        big, small = ("k", "c") if case == "1.7" else ("c", "k")
        return dict(full, r=0.0, s=0.0, **{small: min(L[small], 1 - L[big])})
    if case in ("1.8", "1.10"):
        big, small = ("k", "c") if case == "1.8" else ("c", "k")
        hwb = L["h"] + L["w"] + L["b"]
        t = cap(min(L["r"] + L["s"], hwb - L[big]), L["r"], L["s"])
        r, s = split2(L["r"], L["s"], t)
        return dict(full, r=r, s=s, **{small: min(L[small], 1 - hwb)})
    if case == "2.1":
        r, s = split2(L["r"], L["s"], cap(1.0, L["r"], L["s"]))
        return dict(b=0.0, c=0.0, k=0.0, w=r, h=s, r=r, s=s)
    if case == "2.2.1":
        hwb = L["h"] + L["w"] + L["b"]
        return dict(full, c=1 - hwb, k=hwb - L["r"] - L["s"])
    hs, wr = max(L["h"] - L["s"], 0.0), max(L["w"] - L["r"], 0.0)
    if case == "2.2.2.1":
        ck = (1 - L["r"] - L["s"]) / 2
        b, dh, dw = split3(L["b"], hs, wr, cap(ck, L["b"], hs, wr))
        return dict(full, c=ck, k=ck, b=b, h=L["s"] + dh, w=L["r"] + dw)
    # 2.2.2.2: block the smaller of C and K fully and mirror it on the other
    small = min(L["c"], L["k"])
    b, dh, dw = split3(L["b"], hs, wr, cap(1 - small - L["r"] - L["s"], L["b"], hs, wr))
    return dict(full, c=small, k=small, b=b, h=L["s"] + dh, w=L["r"] + dw)


def _materialize(logs: dict, p: ConvParams, M: int) -> dict:
    bounds = dict(zip(_DIMS, (p.B, p.C, p.K, p.W, p.H, p.R, p.S)))
    blocks = {d: min(bounds[d], max(1, math.floor(M ** logs[d] * (1 + 1e-9)))) for d in _DIMS}
    # float rounding can overshoot a capacity by one; shrink the largest block
    while not admissible(blocks, p, M):
        if all(v == 1 for v in blocks.values()):
            break
        cands = [d for d in _DIMS if blocks[d] > 1]
        d = max(cands, key=lambda u: blocks[u])
        blocks[d] -= 1
        if d == "w" and blocks["r"] > blocks["w"]:
            blocks["r"] = blocks["w"]
        if d == "h" and blocks["s"] > blocks["h"]:
            blocks["s"] = blocks["h"]
    changed = True
    while changed:
        changed = False
        for d in _DIMS:
            if blocks[d] < bounds[d]:
                trial = dict(blocks, **{d: blocks[d] + 1})
                if admissible(trial, p, M):
                    blocks = trial
                    changed = True
    return blocks


def stride1_decision_tree(p: ConvParams, m: CacheModel | int) -> Stride1Result:
    """Case label, attainable lower bound and an admissible tiling for unit stride."""
    validate_params(p)
    if p.sigma_w != 1 or p.sigma_h != 1:
        raise ParamError("the stride-1 decision tree needs sigma_w = sigma_h = 1")
    if p.is_pool:
        raise ParamError("the stride-1 decision tree covers convolution only")
    M = as_cache(m).M
    case = _choose_case(p, M)
    if M == 1:
        blocks = {d: 1 for d in _DIMS}
    else:
        blocks = _materialize(_log_blocks(case, p, M), p, M)
    t = Tiling(b_b=blocks["b"], b_c=blocks["c"], b_k=blocks["k"], b_w=blocks["w"],
               b_h=blocks["h"], b_r1=blocks["r"], b_r2=1, b_s1=blocks["s"], b_s2=1)
    return Stride1Result(case, _alb(case, p, M), t)


def decision_tree_cost(res: Stride1Result, p: ConvParams, m: CacheModel | int) -> Fraction:
    M = as_cache(m).M
    t = res.tiling
    blocks = dict(zip(_DIMS, (t.b_b, t.b_c, t.b_k, t.b_w, t.b_h, t.b_r1, t.b_s1)))
    return block_cost(blocks, p, M)
