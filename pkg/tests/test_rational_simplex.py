from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy.optimize import linprog

from convopt.rational import Q, fmt, q, rank, rref, solve_particular, to_fraction
from convopt.simplex import Infeasible, LPError, LPInstance, Unbounded, maximize, simplex_solve, solve_lp

small = st.integers(-5, 5)


def matrices(rows, cols):
    return st.lists(st.lists(small, min_size=cols, max_size=cols), min_size=rows, max_size=rows)


@pytest.mark.parametrize("raw,expected", [(3, "3"), (Fraction(6, 4), "3/2"), ("-2/6", "-1/3"), (0.5, "1/2")])
def test_coercion_and_format(raw, expected):
    assert fmt(q(raw)) == expected


def test_to_fraction_round_trip():
    assert to_fraction(Q(7, 3)) == Fraction(7, 3)


@given(st.integers(1, 5), st.integers(1, 5), st.data())
def test_rank_matches_numpy(r, c, data):
    A = data.draw(matrices(r, c))
    assert rank(A) == np.linalg.matrix_rank(np.array(A, dtype=float))


@given(st.integers(1, 4), st.integers(1, 4), st.data())
def test_rref_is_reduced(r, c, data):
    A = data.draw(matrices(r, c))
    red, pivots = rref(A)
    for i, col in enumerate(pivots):
        assert red[i][col] == 1
        assert all(red[k][col] == 0 for k in range(len(red)) if k != i)
    assert pivots == sorted(pivots)


@given(st.integers(1, 4), st.integers(1, 4), st.data())
def test_solve_particular(r, c, data):
    A = data.draw(matrices(r, c))
    x0 = data.draw(st.lists(small, min_size=c, max_size=c))
    b = [sum(a * x for a, x in zip(row, x0)) for row in A]
    x = solve_particular(A, b)
    assert [sum(q(a) * xi for a, xi in zip(row, x)) for row in A] == b


def test_solve_particular_inconsistent():
    assert solve_particular([[1, 1], [2, 2]], [1, 3]) is None


def test_simple_lp():
    # max x + y s.t. x <= 2, y <= 3, x + y <= 4
    x, val = maximize([1, 1], [[1, 0], [0, 1], [1, 1]], [2, 3, 4])
    assert val == 4


def test_infeasible():
    with pytest.raises(Infeasible):
        solve_lp([1], [[1], [-1]], [0, -1])


def test_unbounded():
    with pytest.raises(Unbounded):
        solve_lp([-1, 0], [[0, 1]], [1])


def test_exact_thirds():
    # min -x - y s.t. 3x + y <= 1, x + 3y <= 1, x, y >= 0
    x, val = solve_lp([-1, -1], [[3, 1], [1, 3], [-1, 0], [0, -1]], [1, 1, 0, 0])
    assert x == [Q(1, 4), Q(1, 4)] and val == Q(-1, 2)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(1, 6), st.data())
def test_against_scipy(n, m, data):
    A = data.draw(matrices(m, n))
    b = data.draw(st.lists(st.integers(0, 10), min_size=m, max_size=m))
    c = data.draw(st.lists(small, min_size=n, max_size=n))
    # box keeps the problem bounded; b >= 0 keeps the origin feasible
    A_full = A + [[int(i == j) for j in range(n)] for i in range(n)] + [[-int(i == j) for j in range(n)] for i in range(n)]
    b_full = b + [7] * n + [7] * n
    x, val = solve_lp(c, A_full, b_full)
    ref = linprog(c, A_ub=A_full, b_ub=b_full, bounds=[(None, None)] * n, method="highs")
    assert ref.status == 0
    assert abs(float(val) - ref.fun) < 1e-7
    assert all(sum(q(a) * xi for a, xi in zip(row, x)) <= bi for row, bi in zip(A_full, b_full))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(1, 5), st.data())
def test_infeasibility_matches_scipy(n, m, data):
    A = data.draw(matrices(m, n))
    b = data.draw(st.lists(st.integers(-6, 6), min_size=m, max_size=m))
    A_full = A + [[int(i == j) for j in range(n)] for i in range(n)] + [[-int(i == j) for j in range(n)] for i in range(n)]
    b_full = b + [5] * n + [5] * n
    ref = linprog([0] * n, A_ub=A_full, b_ub=b_full, bounds=[(None, None)] * n, method="highs")
    assume(ref.status in (0, 2))
    if ref.status == 2:
        with pytest.raises(Infeasible):
            solve_lp([0] * n, A_full, b_full)
    else:
        solve_lp([0] * n, A_full, b_full)


def test_parametric_instance():
    lp = LPInstance(c=[-1], G=[[1], [1], [-1]], w=[1, 0, 0], F=[[0], [1], [0]])
    sol = simplex_solve(lp, [Fraction(1, 2)])
    assert sol.x == [Q(1, 2)] and 1 in sol.tight_rows
    with pytest.raises(ValueError):
        lp.rhs([1, 2])


def test_vertexless_feasible_set():
    lp = LPInstance(c=[0, 0], G=[[1, 0]], w=[1], F=[[]])
    with pytest.raises(LPError):
        simplex_solve(lp, [])
