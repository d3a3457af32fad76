import math

import pytest
from hypothesis import given, strategies as st

from convopt.model import (ALEXNET_CONV1, CacheModel, ConvParams, FilterTooLarge, KernelKind,
                           NonPositive, ParamError, StrideTooLarge, array_sizes, total_flops,
                           validate_params)


@st.composite
def valid_params(draw, max_dim=6, max_stride=3, kind=None):
    sw, sh = draw(st.integers(1, max_stride)), draw(st.integers(1, max_stride))
    W, H = draw(st.integers(1, max_dim)), draw(st.integers(1, max_dim))
    R = draw(st.integers(sw, sw * W))
    S = draw(st.integers(sh, sh * H))
    B, C, K = (draw(st.integers(1, max_dim)) for _ in range(3))
    k = kind or draw(st.sampled_from(list(KernelKind)))
    return ConvParams(B, C, K, W, H, R, S, sw, sh, k)


def test_alexnet_is_valid():
    assert validate_params(ALEXNET_CONV1) is ALEXNET_CONV1


def test_stride_larger_than_filter():
    with pytest.raises(StrideTooLarge):
        validate_params(ConvParams(1, 1, 1, 3, 3, 1, 1, sigma_w=2))


def test_filter_larger_than_input():
    with pytest.raises(FilterTooLarge):
        validate_params(ConvParams(B=1, C=1, K=1, W=2, H=5, R=5, S=1))


@pytest.mark.parametrize("field", ["B", "C", "K", "W", "H", "R", "S", "sigma_w", "sigma_h"])
def test_non_positive_field(field):
    p = ConvParams(2, 2, 2, 2, 2, 2, 2, 1, 1).replace(**{field: 0})
    with pytest.raises(NonPositive):
        validate_params(p)


def test_errors_share_a_base_class():
    assert issubclass(StrideTooLarge, ParamError) and issubclass(FilterTooLarge, ParamError)


def test_cache_model_rejects_zero():
    with pytest.raises(ValueError):
        CacheModel(0)


def test_alexnet_sizes():
    sizes = array_sizes(ALEXNET_CONV1)
    assert sizes.out_words == 96 * 55 * 55 * 1000 == 290_400_000
    assert sizes.filter_words == 96 * 3 * 11 * 11
    assert total_flops(ALEXNET_CONV1) == 105_415_200_000


def test_unit_layer_sizes():
    sizes = array_sizes(ConvParams(1, 1, 1, 1, 1, 1, 1))
    assert (sizes.out_words, sizes.filter_words, sizes.image_words) == (1, 1, 4)


def test_pooling_has_no_filter():
    p = ConvParams(1, 2, 2, 3, 3, 2, 2, kind=KernelKind.POOL)
    assert array_sizes(p).filter_words == 0


def test_total_flops_small():
    assert total_flops(ConvParams(B=2, C=3, K=5, W=7, H=1, R=1, S=1)) == 210


@given(valid_params())
def test_image_within_four_times_simplified(p):
    s = array_sizes(p)
    assert s.image_words <= 4 * s.image_words_simplified


@given(valid_params())
def test_lifted_bounds_cover_filter(p):
    b = p.lifted_bounds()
    assert b[5] * b[6] >= p.R and (b[5] - 1) * b[6] < p.R
    assert b[7] * b[8] >= p.S and (b[7] - 1) * b[8] < p.S
    assert math.prod(b[:5]) == p.B * p.C * p.K * p.W * p.H


@given(valid_params())
def test_json_round_trip(p):
    assert ConvParams.from_json(p.to_json()) == p


@pytest.mark.parametrize("bad", [{"B": 1}, {**ALEXNET_CONV1.to_dict(), "B": 1.5},
                                 {**ALEXNET_CONV1.to_dict(), "kind": "deconv"},
                                 {**ALEXNET_CONV1.to_dict(), "C": True}])
def test_from_dict_rejects(bad):
    with pytest.raises(ParamError):
        ConvParams.from_dict(bad)
