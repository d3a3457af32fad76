import json
import random

import pytest

from convopt.model import KernelKind
from convopt.mplp import (AffineOptimizer, DegenerateSamplingExhausted, Partition, Piece, child_seed,
                          log_cost_formula, optimizer_from_tight, partition_parameter_space,
                          verify_attainability)
from convopt.polyhedra import Region, sample_interior
from convopt.rational import Q, dot
from convopt.simplex import LPInstance, simplex_solve
from convopt.tiling import build_tiling_lp, parameter_region

TOY = LPInstance(c=[-1], G=[[1], [1]], w=[1, 0], F=[[0], [1]])
TOY_PARENT = Region([[1], [-1]], [2, 0], 1)


def test_toy_problem():
    part = partition_parameter_space(TOY, TOY_PARENT, rng_seed=3)
    by_opt = {(pc.optimizer.E[0][0], pc.optimizer.e[0]): pc.region for pc in part.pieces}
    assert set(by_opt) == {(1, 0), (0, 1)}
    low, high = by_opt[(1, 0)], by_opt[(0, 1)]
    assert low.contains([Q(1, 2)]) and not low.contains([Q(3, 2)])
    assert high.contains([Q(3, 2)]) and not high.contains([Q(1, 2)])
    assert low.contains([1]) and high.contains([1])


def test_flat_parent_gives_empty_partition():
    flat = Region([[1], [-1]], [1, -1], 1)
    assert len(partition_parameter_space(TOY, flat)) == 0


def test_degenerate_sampling_is_bounded(monkeypatch):
    calls = []

    def always_degenerate(lp, tight):
        calls.append(tight)
        return None

    monkeypatch.setattr("convopt.mplp.optimizer_from_tight", always_degenerate)
    with pytest.raises(DegenerateSamplingExhausted):
        partition_parameter_space(TOY, TOY_PARENT, retries=3)
    assert len(calls) == 3


def test_optimizer_from_tight_rejects_parameter_relation():
    lp = LPInstance(c=[-1], G=[[1], [1]], w=[0, 0], F=[[1], [2]])
    assert optimizer_from_tight(lp, (0, 1)) is None
    assert optimizer_from_tight(lp, (0,)).E == [[Q(1)]]


def test_child_seeds_are_distinct_and_stable():
    seeds = [child_seed(0, i) for i in range(50)]
    assert len(set(seeds)) == 50
    assert child_seed(0, 7) == child_seed(0, 7) != child_seed(1, 7)


def test_determinism():
    lp, parent = build_tiling_lp(KernelKind.POOL), parameter_region(4)
    a = partition_parameter_space(lp, parent, rng_seed=11, kind=KernelKind.POOL)
    b = partition_parameter_space(lp, parent, rng_seed=11, kind=KernelKind.POOL)
    assert a.to_json() == b.to_json()


def test_per_region_optimality(conv_partition):
    lp = build_tiling_lp(KernelKind.CONV)
    rng = random.Random(0)
    for pc in conv_partition.pieces:
        for _ in range(10):
            theta = sample_interior(pc.region, rng)
            x = pc.optimizer(theta)
            rhs = lp.rhs(theta)
            assert all(dot(g, x) <= r for g, r in zip(lp.G, rhs))
            assert dot(lp.c, x) == simplex_solve(lp, theta).objective


def test_coverage(conv_partition):
    parent = parameter_region(8)
    rng = random.Random(42)
    for _ in range(10_000):
        theta = sample_interior(parent, rng, resolution=10**4)
        # spread samples over the whole parent, not just near its centre
        theta = [t * Q(rng.randint(0, 16), 8) for t in theta]
        if not parent.contains(theta):
            continue
        hits = conv_partition.locate(theta)
        assert hits, theta
        if len(hits) > 1:
            assert all(conv_partition.pieces[i].region.tight_at(theta) for i in hits)


def test_partitions_verify(conv_partition, pool_partition):
    for part in (conv_partition, pool_partition):
        rep = verify_attainability(part)
        assert rep.ok and rep.worst_max_gap == 0 and rep.smallest_min_gap >= 0


def test_halved_optimizer_is_caught(conv_partition):
    bad = Partition([Piece(pc.region, pc.optimizer.scaled(Q(1, 2))) for pc in conv_partition.pieces],
                    kind=KernelKind.CONV)
    rep = verify_attainability(bad)
    assert not rep.ok and rep.worst_max_gap > 0


def test_pool_partition_checked_against_conv_bounds_fails(pool_partition):
    # without a Filter array the pooling tiles beat the filter-size term
    assert not verify_attainability(pool_partition, KernelKind.CONV).ok


def test_json_round_trip(pool_partition):
    back = Partition.from_json(pool_partition.to_json())
    assert back.kind is KernelKind.POOL and len(back) == len(pool_partition)
    assert back.to_json() == pool_partition.to_json()
    assert verify_attainability(back).as_dict() == verify_attainability(pool_partition).as_dict()


def test_cost_formula_of_full_tile():
    # x = theta on the loop-bound coordinates: cost = F * M / F = M, i.e. log 1
    E = [[Q(int(i == j)) for j in range(9)] for i in range(5)] + [[Q(0)] * 9 for _ in range(4)]
    coeffs, const = log_cost_formula(AffineOptimizer(E, [0] * 9))
    assert coeffs[:5] == [0] * 5 and coeffs[5:7] == [1, 1] and const == 1


def test_mixed_kinds_rejected(pool_partition, conv_partition):
    mixed = json.loads(pool_partition.to_json())[:1] + json.loads(conv_partition.to_json())[:1]
    with pytest.raises(ValueError):
        Partition.from_json(json.dumps(mixed))
