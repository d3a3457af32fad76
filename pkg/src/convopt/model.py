"""Layer description, derived array sizes and validity checks.

A layer is the seven-loop nest

    for b, c, k, w, h, r, s:
        Out[k, h, w, b] += Image[r + sw*w, s + sh*h, c, b] * Filter[k, r, s, c]

Pooling layers share the loop structure but have no Filter array.
All counts are Python ints, so nothing overflows.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, fields


class KernelKind(str, enum.Enum):
    CONV = "conv"
    POOL = "pool"


class ParamError(ValueError):
    """Base class for invalid layer descriptions."""


class NonPositive(ParamError):
    pass


class FilterTooLarge(ParamError):
    pass


class StrideTooLarge(ParamError):
    pass


@dataclass(frozen=True)
class ConvParams:
    B: int
    C: int
    K: int
    W: int
    H: int
    R: int
    S: int
    sigma_w: int = 1
    sigma_h: int = 1
    kind: KernelKind = KernelKind.CONV

    @property
    def is_pool(self) -> bool:
        return self.kind is KernelKind.POOL

    @property
    def r_outer(self) -> int:
        """Trip count of r' after the split r = sigma_w*r' + r''."""
        return -(-self.R // self.sigma_w)

    @property
    def s_outer(self) -> int:
        return -(-self.S // self.sigma_h)

    def lifted_bounds(self) -> tuple[int, ...]:
        """Loop bounds of the nine-loop nest (b, c, k, w, h, r', r'', s', s'')."""
        return (self.B, self.C, self.K, self.W, self.H,
                self.r_outer, self.sigma_w, self.s_outer, self.sigma_h)

    def replace(self, **changes) -> "ConvParams":
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(changes)
        return ConvParams(**d)

    # JSON layer descriptor -------------------------------------------------

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ConvParams":
        try:
            kind = KernelKind(d.get("kind", "conv"))
        except ValueError:
            raise ParamError(f"unknown kind {d.get('kind')!r}") from None
        vals = {}
        for name in ("B", "C", "K", "W", "H", "R", "S", "sigma_w", "sigma_h"):
            if name not in d:
                raise ParamError(f"missing field {name!r}")
            v = d[name]
            if isinstance(v, bool) or not isinstance(v, int):
                raise ParamError(f"field {name!r} must be an integer, got {v!r}")
            vals[name] = v
        return cls(kind=kind, **vals)

    @classmethod
    def from_json(cls, text: str) -> "ConvParams":
        return cls.from_dict(json.loads(text))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class CacheModel:
    M: int

    def __post_init__(self):
        if self.M < 1:
            raise ValueError(f"cache capacity must be >= 1, got {self.M}")


@dataclass(frozen=True)
class ArraySizes:
    out_words: int
    image_words: int
    filter_words: int
    image_words_simplified: int


def validate_params(raw: ConvParams) -> ConvParams:
    """Return `raw` unchanged if it describes a valid layer, else raise."""
    for name in ("B", "C", "K", "W", "H", "R", "S", "sigma_w", "sigma_h"):
        v = getattr(raw, name)
        if not isinstance(v, int) or isinstance(v, bool):
            raise ParamError(f"{name} must be an integer, got {v!r}")
        if v < 1:
            raise NonPositive(f"{name} must be >= 1, got {v}")
    if raw.sigma_w > raw.R or raw.sigma_h > raw.S:
        raise StrideTooLarge(
            f"strides ({raw.sigma_w}, {raw.sigma_h}) exceed filter ({raw.R}, {raw.S})")
    if raw.R > raw.sigma_w * raw.W or raw.S > raw.sigma_h * raw.H:
        raise FilterTooLarge(
            f"filter ({raw.R}, {raw.S}) larger than input "
            f"({raw.sigma_w * raw.W}, {raw.sigma_h * raw.H})")
    return raw


def as_cache(m: CacheModel | int) -> CacheModel:
    return m if isinstance(m, CacheModel) else CacheModel(int(m))


def array_sizes(p: ConvParams) -> ArraySizes:
    out = p.K * p.H * p.W * p.B
    image = p.C * (p.sigma_h * p.H + p.S) * (p.sigma_w * p.W + p.R) * p.B
    filt = 0 if p.is_pool else p.K * p.C * p.R * p.S
    simplified = p.C * p.H * p.W * p.B * p.sigma_h * p.sigma_w
    return ArraySizes(out, image, filt, simplified)


def total_flops(p: ConvParams) -> int:
    return math.prod((p.B, p.C, p.K, p.W, p.H, p.R, p.S))


# First AlexNet convolution with batch 1000.
ALEXNET_CONV1 = ConvParams(B=1000, C=3, K=96, W=55, H=55, R=11, S=11, sigma_w=4, sigma_h=4)
