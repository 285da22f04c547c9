import itertools

import numpy as np
import pytest

from mecwpt import Infeasible, Unbounded, solve_lp


def enumerate_vertices(c, a_ge, b_ge):
    """Brute-force oracle: intersect every n-subset of the constraint
    boundaries (rows of a.x = b plus axes x_i = 0), keep feasible points,
    return the minimum objective."""
    a_ge = np.asarray(a_ge, dtype=float)
    b_ge = np.asarray(b_ge, dtype=float)
    n = c.size
    rows = [(a_ge[i], b_ge[i]) for i in range(a_ge.shape[0])]
    rows += [(np.eye(n)[i], 0.0) for i in range(n)]
    best = None
    for combo in itertools.combinations(range(len(rows)), n):
        A = np.array([rows[i][0] for i in combo])
        b = np.array([rows[i][1] for i in combo])
        try:
            x = np.linalg.solve(A, b)
        except np.linalg.LinAlgError:
            continue
        if np.any(x < -1e-9):
            continue
        if np.any(a_ge @ x < b_ge - 1e-9 * np.maximum(1, np.abs(b_ge))):
            continue
        val = float(c @ x)
        if best is None or val < best:
            best = val
    return best


def test_single_bound():
    x = solve_lp(np.array([1.0]), a_ge=[[1.0]], b_ge=[3.0])
    np.testing.assert_allclose(x, [3.0])


def test_two_variable_vertex():
    c = np.array([2.0, 1.0])
    a = [[1.0, 1.0], [2.0, 0.5]]
    b = [4.0, 3.0]
    x = solve_lp(c, a_ge=a, b_ge=b)
    oracle = enumerate_vertices(c, a, b)
    assert float(c @ x) == pytest.approx(oracle, abs=1e-9)


def test_random_instances_match_vertex_enumeration(rng):
    for trial in range(40):
        n = int(rng.integers(2, 5))
        m = int(rng.integers(1, 5))
        a = rng.uniform(0.0, 2.0, size=(m, n))
        a[a < 0.3] = 0.0
        # guarantee every row is satisfiable
        for i in range(m):
            if np.all(a[i] == 0.0):
                a[i, int(rng.integers(0, n))] = 1.0
        b = rng.uniform(0.1, 3.0, size=m)
        c = rng.uniform(0.1, 2.0, size=n)
        x = solve_lp(c, a_ge=a, b_ge=b)
        assert np.all(x >= -1e-9)
        assert np.all(a @ x >= b - 1e-8 * np.maximum(1, np.abs(b)))
        oracle = enumerate_vertices(c, a, b)
        assert float(c @ x) == pytest.approx(oracle, abs=1e-9), f"trial {trial}"


def test_upper_bounds_and_mixed_system():
    # min -x - 2y st x + y <= 4, x <= 3, y <= 3
    c = np.array([-1.0, -2.0])
    x = solve_lp(c, a_le=[[1.0, 1.0], [1.0, 0.0], [0.0, 1.0]],
                 b_le=[4.0, 3.0, 3.0])
    np.testing.assert_allclose(x, [1.0, 3.0], atol=1e-9)


def test_contradictory_constraints():
    with pytest.raises(Infeasible):
        solve_lp(np.array([1.0]), a_ge=[[1.0], [-1.0]], b_ge=[3.0, -1.0])


def test_unbounded():
    with pytest.raises(Unbounded):
        solve_lp(np.array([-1.0]), a_ge=[[1.0]], b_ge=[0.0])


def test_degenerate_and_scaled_rows():
    # wildly mixed scales (the solver equilibrates rows)
    c = np.array([1.0, 1.0])
    a = [[1e-9, 0.0], [0.0, 1e6]]
    b = [3e-9, 2e6]
    x = solve_lp(c, a_ge=a, b_ge=b)
    np.testing.assert_allclose(x, [3.0, 2.0], rtol=1e-9)


def test_zero_requests():
    x = solve_lp(np.array([1.0, 2.0]), a_ge=[[1.0, 1.0]], b_ge=[0.0])
    np.testing.assert_allclose(x, [0.0, 0.0], atol=1e-12)
