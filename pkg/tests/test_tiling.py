
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from convopt.bounds import lower_bound
from convopt.model import ALEXNET_CONV1, ConvParams, KernelKind, total_flops
from convopt.tiling import (VARS, Tiling, build_tiling_lp, footprints, is_feasible, lp_log_tiles, log_params,
                            parameter_region, polish, solve_tiling, tiling_comm_cost, violations)

from test_model import valid_params


def test_alexnet_lp_tile_rounds_to_closed_forms():
    M = 1024
    real = [M ** float(x) for x in lp_log_tiles(ALEXNET_CONV1, M)]
    assert tuple(round(v) for v in real) == (12, 3, 12, 3, 3, 3, 1, 3, 4)
    # b_b = b_k = sqrt(M sigma_w sigma_h / (R S)) = 128/11
    assert real[0] == pytest.approx(128 / 11, rel=1e-9)


def test_alexnet_integer_tilings():
    t = solve_tiling(ALEXNET_CONV1, 1024)
    assert is_feasible(t, ALEXNET_CONV1, 1024)
    assert (t.b_c, t.b_k) == (3, 12)
    plain = solve_tiling(ALEXNET_CONV1, 1024, fill=False)
    assert plain.b_b == plain.b_k == 12 and plain.b_c == 3
    assert t.product() >= plain.product()


def test_lp_shape():
    conv, pool = build_tiling_lp(KernelKind.CONV), build_tiling_lp(KernelKind.POOL)
    assert conv.n_vars == 9 and conv.n_params == 9
    assert conv.n_rows == 9 + 5 + 2 + 2 + 1 + 1 + 4
    assert pool.n_rows == conv.n_rows - 1


@settings(max_examples=25, deadline=None)
@given(valid_params(kind=KernelKind.CONV), st.sampled_from([4, 16, 64, 256, 1024]))
def test_lp_optimum_matches_scipy(p, M):
    lp = build_tiling_lp(p)
    theta = log_params(p, M)
    logs = lp_log_tiles(p, M)
    rhs = [float(v) for v in lp.rhs(theta)]
    ref = linprog([-1] * 9, A_ub=[[float(x) for x in row] for row in lp.G], b_ub=rhs,
                  bounds=[(None, None)] * 9, method="highs")
    assert ref.status == 0
    assert float(sum(logs)) == pytest.approx(-ref.fun, abs=1e-7)
    assert all(float(sum(g * x for g, x in zip(row, logs))) <= b + 1e-12 for row, b in zip(lp.G, rhs))


@settings(max_examples=60, deadline=None)
@given(valid_params(max_dim=5), st.integers(1, 64))
def test_solve_tiling_is_feasible(p, M):
    t = solve_tiling(p, M)
    assert is_feasible(t, p, M), violations(t, p, M)
    assert polish(t, p, M) == t  # already a local optimum


@given(valid_params(max_dim=5), st.integers(1, 64))
def test_cost_formula(p, M):
    t = Tiling.ones()
    assert tiling_comm_cost(t, p, M) == total_flops(p) * M


def test_m_equal_one_gives_unit_tiles():
    assert solve_tiling(ALEXNET_CONV1, 1) == Tiling.ones()


def test_violations_are_reported():
    p = ConvParams(2, 2, 2, 4, 4, 2, 2)
    bad = Tiling(2, 2, 2, 4, 4, 2, 1, 2, 1)
    msgs = violations(bad, p, 8)
    assert any("Out" in m for m in msgs) and any("Filter" in m for m in msgs)
    assert violations(Tiling(3, 1, 1, 1, 1, 1, 1, 1, 1), p, 8) == ["b_b=3 outside [1, 2]"]
    with pytest.raises(ValueError):
        tiling_comm_cost(bad, p, 8)


def test_footprints():
    p = ConvParams(2, 3, 4, 5, 5, 3, 3, 2, 2)
    f = footprints(Tiling(1, 2, 3, 2, 2, 1, 2, 1, 2), p)
    assert f == {"out": 12, "filter": 24, "image": 2 * 3 * 3 * 2 * 2}
    assert footprints(Tiling.ones(), p.replace(kind=KernelKind.POOL))["filter"] == 0


def test_tiling_json_round_trip():
    t = Tiling(1, 2, 3, 4, 5, 6, 7, 8, 9)
    assert Tiling.from_dict(t.to_dict()) == t
    assert set(t.to_dict()) == {"b_" + v for v in VARS}


def test_parameter_region_contains_alexnet():
    theta = log_params(ALEXNET_CONV1, 2)
    assert parameter_region(theta_max=20).contains(theta)


def test_alexnet_cost_near_bound():
    t = solve_tiling(ALEXNET_CONV1, 1024)
    assert tiling_comm_cost(t, ALEXNET_CONV1, 1024) <= 4 * lower_bound(ALEXNET_CONV1, 1024).max_term


def test_full_tile_costs_one_round():
    p = ConvParams(2, 3, 4, 5, 5, 3, 3)
    assert tiling_comm_cost(Tiling.full(p), p, 10**6) == 10**6


@settings(max_examples=80, deadline=None)
@given(valid_params(max_dim=16, max_stride=4), st.integers(2, 4096))
def test_cost_within_64_of_bound(p, M):
    lb = lower_bound(p, M).max_term
    if lb < M:
        return
    assert tiling_comm_cost(solve_tiling(p, M), p, M) <= 64 * lb
