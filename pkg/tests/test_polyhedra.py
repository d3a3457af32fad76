import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from convopt.polyhedra import (EmptyRegion, Region, chebyshev, maximize_affine, minimize_affine,
                               region_is_empty, region_is_full_dim, remove_redundant, sample_interior)
from convopt.rational import Q

rows = st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3), st.integers(-2, 6)), max_size=6)


def boxed(extra):
    r = Region.box(2, 0, 4)
    return r.with_rows([[a, b] for a, b, _ in extra], [c for _, _, c in extra])


GRID = [(Fraction(i, 2), Fraction(j, 2)) for i, j in itertools.product(range(-1, 10), repeat=2)]


@settings(max_examples=60, deadline=None)
@given(rows)
def test_redundancy_removal_keeps_the_set(extra):
    r = boxed(extra)
    reduced, kept = remove_redundant(r)
    if region_is_empty(r):
        return
    assert all(r.contains(t) == reduced.contains(t) for t in GRID)
    assert len(kept) == len(reduced)


@settings(max_examples=60, deadline=None)
@given(rows)
def test_chebyshev_ball_is_inside(extra):
    r = boxed(extra)
    ch = chebyshev(r)
    if ch is None:
        assert not any(r.contains(t) for t in GRID)
        return
    c, rho = ch
    assert 0 <= rho <= 1
    for dx, dy in itertools.product((-rho, rho), repeat=2):
        assert r.contains([c[0] + dx, c[1] + dy])


def test_unit_box_centre():
    c, rho = chebyshev(Region.box(2, 0, 1))
    assert c == [Q(1, 2), Q(1, 2)] and rho == Q(1, 2)


def test_empty_and_flat():
    empty = Region([[1], [-1]], [0, -1], 1)
    assert region_is_empty(empty)
    flat = Region([[1], [-1]], [1, -1], 1)
    assert not region_is_empty(flat) and not region_is_full_dim(flat)
    with pytest.raises(EmptyRegion):
        sample_interior(flat, 0)


def test_duplicate_rows_keep_protected_copy():
    r = Region([[1], [2], [-1]], [1, 2, 0], 1)
    _, kept = remove_redundant(r, protect=[1])
    assert kept == [1, 2]


@given(st.integers(0, 10**6))
def test_samples_strictly_inside(seed):
    r = Region([[1, 1], [-1, 0], [0, -1]], [1, 0, 0], 2)
    t = sample_interior(r, random.Random(seed))
    assert r.contains(t, strict=True)


def test_affine_extremes():
    r = Region.box(2, 0, 3)
    assert minimize_affine([1, -1], 5, r)[0] == 2
    assert maximize_affine([1, -1], 5, r)[0] == 8


def test_normalized_merges_scaled_rows():
    r = Region([[2, 4], [1, 2], [0, 0]], [6, 3, 1], 2).normalized()
    assert len(r) == 1 and r.A[0] == [1, 2] and r.b[0] == 3


def test_json_round_trip():
    r = Region([[Q(1, 3), -1]], [Q(5, 2)], 2)
    back = Region.from_json(r.to_json())
    assert back.A == r.A and back.b == r.b
