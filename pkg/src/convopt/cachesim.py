"""Word-granularity traffic simulation of the blocked nine-loop nest.

Two memory models are offered. ``ideal`` charges every outer tile for the
distinct words it touches (inputs loaded once, Out loaded and stored once).
``lru`` replays the exact access trace through a fully associative LRU
cache of M words with write-back of dirty Out words.

Loop order, both across and inside tiles: b, c, k, w, h, r', r'', s', s''.
Per iteration the accesses are Image, Filter, then Out (read-modify-write).
"""
from __future__ import annotations

import enum
import itertools
import math
from collections import OrderedDict
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .model import ConvParams, validate_params
from .tiling import Tiling, footprints, solve_tiling, violations

DEFAULT_CAP = 10**8


class CapExceeded(ValueError):
    pass


class Policy(str, enum.Enum):
    IDEAL = "ideal"
    LRU = "lru"


@dataclass
class SimConfig:
    params: ConvParams
    tiling: Tiling
    M: int
    policy: Policy = Policy.LRU
    element_tracking: bool = False
    pool_mode: str = "max"
    cap: int = DEFAULT_CAP
    seed: int = 0

    def __post_init__(self):
        self.policy = Policy(self.policy)


@dataclass
class TrafficReport:
    loads: int
    stores: int
    per_array: dict
    rounds: int
    compulsory: int
    policy: Policy
    matches_reference: bool | None = None
    out: object = field(default=None, repr=False)

    @property
    def total_words(self) -> int:
        return self.loads + self.stores

    def as_dict(self) -> dict:
        return {
            "policy": self.policy.value,
            "loads": self.loads,
            "stores": self.stores,
            "total_words": self.total_words,
            "per_array": self.per_array,
            "rounds": self.rounds,
            "compulsory": self.compulsory,
            "matches_reference": self.matches_reference,
        }


def tile_footprint(t: Tiling, p: ConvParams) -> dict:
    """Formula footprint of one full tile, in words per array."""
    return footprints(t, p)


def lru_tiling(p: ConvParams, M: int) -> Tiling:
    """LP tiling sized for M/3 words so that all three tiles fit in the cache at once."""
    return solve_tiling(p, max(1, M // 3), fill=False)


def auto_tiling(p: ConvParams, M: int, policy=Policy.LRU) -> Tiling:
    return lru_tiling(p, M) if Policy(policy) is Policy.LRU else solve_tiling(p, M)


def image_shape(p: ConvParams) -> tuple:
    return ((p.W - 1) * p.sigma_w + p.R, (p.H - 1) * p.sigma_h + p.S, p.C, p.B)


def filter_shape(p: ConvParams) -> tuple:
    return (p.K, p.R, p.S, p.C)


def out_shape(p: ConvParams) -> tuple:
    return (p.K, p.H, p.W, p.B)


def random_inputs(p: ConvParams, seed: int = 0, low: int = -3, high: int = 4):
    """Small integer test tensors (Image, Filter or None for pooling)."""
    rng = np.random.default_rng(seed)
    image = rng.integers(low, high, size=image_shape(p)).astype(object)
    filt = None if p.is_pool else rng.integers(low, high, size=filter_shape(p)).astype(object)
    return image, filt


def _combine(p: ConvParams, mode: str):
    if not p.is_pool:
        return lambda acc, img, f: acc + img * f
    if mode == "max":
        return lambda acc, img, f: max(acc, img)
    if mode == "avg":
        scale = Fraction(1, p.R * p.S)
        return lambda acc, img, f: acc + img * scale
    raise ValueError(f"unknown pooling mode {mode!r}")


def _check_shapes(p: ConvParams, image, filt):
    if tuple(image.shape) != image_shape(p):
        raise ValueError(f"Image shape {tuple(image.shape)} != {image_shape(p)}")
    if not p.is_pool:
        if filt is None or tuple(filt.shape) != filter_shape(p):
            got = None if filt is None else tuple(filt.shape)
            raise ValueError(f"Filter shape {got} != {filter_shape(p)}")


def reference_convolution(p: ConvParams, image, filt=None, mode: str = "max"):
    """Plain seven-loop evaluation; Out starts at zero."""
    validate_params(p)
    _check_shapes(p, image, filt)
    op = _combine(p, mode)
    out = np.zeros(out_shape(p), dtype=object)
    sw, sh = p.sigma_w, p.sigma_h
    for b, c, k, w, h, r, s in itertools.product(
            range(p.B), range(p.C), range(p.K), range(p.W), range(p.H), range(p.R), range(p.S)):
        f = None if p.is_pool else filt[k, r, s, c]
        out[k, h, w, b] = op(out[k, h, w, b], image[r + sw * w, s + sh * h, c, b], f)
    return out


class _LRU:
    def __init__(self, capacity: int):
        self.capacity = capacity
        self.lines = OrderedDict()  # key -> dirty
        self.loads = {"out": 0, "image": 0, "filter": 0}
        self.stores = 0

    def access(self, array: str, key, write: bool = False):
        lines = self.lines
        if key in lines:
            lines.move_to_end(key)
            if write:
                lines[key] = True
            return
        self.loads[array] += 1
        lines[key] = write
        if len(lines) > self.capacity:
            _, dirty = lines.popitem(last=False)
            if dirty:
                self.stores += 1

    def flush(self):
        self.stores += sum(1 for d in self.lines.values() if d)
        self.lines.clear()


def _tile_ranges(bound: int, block: int):
    return [range(start, min(start + block, bound)) for start in range(0, bound, block)]


def _distinct_image(rw, rh, r1, r2, s1, s2, p: ConvParams) -> int:
    xs = {rr2 + p.sigma_w * (rr1 + w) for w in rw for rr1 in r1 for rr2 in r2
          if p.sigma_w * rr1 + rr2 < p.R}
    ys = {ss2 + p.sigma_h * (ss1 + h) for h in rh for ss1 in s1 for ss2 in s2
          if p.sigma_h * ss1 + ss2 < p.S}
    return len(xs) * len(ys)


def simulate(cfg: SimConfig) -> TrafficReport:
    p, t, M = cfg.params, cfg.tiling, cfg.M
    validate_params(p)
    bad = violations(t, p, M)
    if bad:
        raise ValueError("infeasible tiling: " + "; ".join(bad))
    bounds = p.lifted_bounds()
    iters = math.prod(bounds)
    if iters > cfg.cap:
        raise CapExceeded(f"{iters} iterations exceed the cap of {cfg.cap}")
    blocks = t.as_tuple()
    rounds = math.prod(-(-n // bk) for n, bk in zip(bounds, blocks))
    tiles = [_tile_ranges(n, bk) for n, bk in zip(bounds, blocks)]
    sw, sh = p.sigma_w, p.sigma_h
    tracking = cfg.element_tracking
    if tracking:
        image, filt = random_inputs(p, cfg.seed)
        op = _combine(p, cfg.pool_mode)
        out = np.zeros(out_shape(p), dtype=object)

    touched_image, touched_filter, touched_out = set(), set(), set()
    cache = _LRU(M) if cfg.policy is Policy.LRU else None
    ideal = {"out": 0, "image": 0, "filter": 0, "out_stores": 0}
    for tb, tc, tk, tw, th, tr1, tr2, ts1, ts2 in itertools.product(*tiles):
        if cache is None:
            # distinct words of this tile
            n_out = len(tk) * len(th) * len(tw) * len(tb)
            n_img = len(tb) * len(tc) * _distinct_image(tw, th, tr1, tr2, ts1, ts2, p)
            live_r = sum(1 for a in tr1 for b2 in tr2 if sw * a + b2 < p.R)
            live_s = sum(1 for a in ts1 for b2 in ts2 if sh * a + b2 < p.S)
            n_filt = 0 if p.is_pool else len(tk) * len(tc) * live_r * live_s
            if live_r and live_s:
                ideal["out"] += n_out
                ideal["image"] += n_img
                ideal["filter"] += n_filt
                ideal["out_stores"] += n_out
        for b, c, k, w, h, r1, r2, s1, s2 in itertools.product(tb, tc, tk, tw, th, tr1, tr2, ts1, ts2):
            r = sw * r1 + r2
            s = sh * s1 + s2
            if r >= p.R or s >= p.S:
                continue
            ik = ("I", r + sw * w, s + sh * h, c, b)
            ok = ("O", k, h, w, b)
            fk = None if p.is_pool else ("F", k, r, s, c)
            touched_image.add(ik)
            touched_out.add(ok)
            if fk is not None:
                touched_filter.add(fk)
            if cache is not None:
                cache.access("image", ik)
                if fk is not None:
                    cache.access("filter", fk)
                cache.access("out", ok, write=True)
            if tracking:
                f = None if p.is_pool else filt[k, r, s, c]
                out[k, h, w, b] = op(out[k, h, w, b], image[r + sw * w, s + sh * h, c, b], f)

    compulsory = len(touched_image) + len(touched_filter) + len(touched_out)
    if cache is not None:
        cache.flush()
        per = {"out": {"loads": cache.loads["out"], "stores": cache.stores},
               "image": {"loads": cache.loads["image"], "stores": 0},
               "filter": {"loads": cache.loads["filter"], "stores": 0}}
        loads, stores = sum(cache.loads.values()), cache.stores
    else:
        out_stores = ideal["out_stores"]
        per = {"out": {"loads": ideal["out"], "stores": out_stores},
               "image": {"loads": ideal["image"], "stores": 0},
               "filter": {"loads": ideal["filter"], "stores": 0}}
        loads = ideal["out"] + ideal["image"] + ideal["filter"]
        stores = out_stores
    rep = TrafficReport(loads, stores, per, rounds, compulsory, cfg.policy)
    if tracking:
        rep.out = out
        rep.matches_reference = bool(np.array_equal(
            out, reference_convolution(p, image, filt, cfg.pool_mode)))
    return rep
