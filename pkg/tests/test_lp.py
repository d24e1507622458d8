from __future__ import annotations

import numpy as np
import pytest

from conftest import linprog_solve, random_lp, vertex_oracle
from lced.dispatch import build_period_lp
from lced.fixtures import toy_b
from lced.lp import LPInstance, Status, dump_lp, simplex_solve

TOL = 1e-8


def _lp_from(c, A, b, is_eq):
    return LPInstance.build(c, A[~is_eq], b[~is_eq], A[is_eq], b[is_eq])


def check_invariants(lp: LPInstance, sol, tol=1e-7):
    x = sol.x
    scale = max(1.0, float(np.abs(x).max(initial=0.0)))
    assert np.all(x >= lp.lo - tol * scale) and np.all(x <= lp.hi + tol * scale)
    if len(lp.g):
        slack = lp.g - lp.G @ x
        assert np.all(slack >= -tol * scale)
        y = sol.duals[: len(lp.g)]
        assert np.all(y <= tol)  # minimization with <= rows
        assert np.all(np.abs(y * slack) <= tol * scale * max(1.0, np.abs(y).max(initial=0.0)))
    if len(lp.h):
        assert np.allclose(lp.H @ x, lp.h, atol=tol * scale)
    d = sol.reduced_costs
    at_lo = np.isclose(x, lp.lo, atol=1e-9)
    at_hi = np.isclose(x, lp.hi, atol=1e-9)
    free = ~at_lo & ~at_hi
    dtol = tol * max(1.0, float(np.abs(lp.objective).max(initial=0.0)))
    assert np.all(d[at_lo & ~at_hi] >= -dtol)
    assert np.all(d[at_hi & ~at_lo] <= dtol)
    assert np.all(np.abs(d[free]) <= dtol)


def test_single_variable_max():
    sol = simplex_solve(LPInstance.build([-1.0], [[1.0]], [1.0]))
    assert sol.status is Status.OPTIMAL
    assert sol.x[0] == pytest.approx(1.0)
    assert sol.objective_value == pytest.approx(-1.0)


def test_face_tie_returns_first_vertex():
    sol = simplex_solve(LPInstance.build([-1.0, -1.0], [[1.0, 1.0]], [1.0]))
    assert sol.objective_value == pytest.approx(-1.0)
    assert np.allclose(sol.x, [1.0, 0.0])
    assert vertex_oracle(np.array([-1.0, -1.0]), np.array([[1.0, 1.0]]), np.array([1.0]),
                         np.array([False])) == ("optimal", -1.0)


def test_toy_b_low_weight_uses_clean_unit():
    case = toy_b()
    lp, vm = build_period_lp(case, 0, 0.3, (5000.0, 100.0))
    x = simplex_solve(lp).x
    assert x[vm.unit_col(0)] == pytest.approx(0.0, abs=1e-9)
    assert x[vm.unit_col(1)] == pytest.approx(100.0)


def test_vertex_oracle_agreement(rng):
    counts = {"optimal": 0, "infeasible": 0, "unbounded": 0}
    for _ in range(300):
        c, A, b, is_eq = random_lp(rng)
        status, value = vertex_oracle(c, A, b, is_eq)
        sol = simplex_solve(_lp_from(c, A, b, is_eq))
        counts[status] += 1
        assert sol.status.value == status
        if status == "optimal":
            assert abs(sol.objective_value - value) <= TOL
    assert min(counts.values()) > 0


def test_general_bounds_against_highs(rng):
    for _ in range(200):
        n = int(rng.integers(1, 7))
        mi, me = int(rng.integers(0, 4)), int(rng.integers(0, 3))
        lo = rng.integers(-5, 3, size=n).astype(float)
        hi = lo + rng.integers(0, 8, size=n)
        lo[rng.random(n) < 0.2] = -np.inf
        hi[rng.random(n) < 0.3] = np.inf
        bounds = [(None if np.isinf(a) else a, None if np.isinf(b) else b) for a, b in zip(lo, hi)]
        lp = LPInstance.build(rng.integers(-9, 10, size=n), rng.integers(-9, 10, size=(mi, n)),
                              rng.integers(-9, 10, size=mi), rng.integers(-9, 10, size=(me, n)),
                              rng.integers(-9, 10, size=me), bounds)
        ref = linprog_solve(lp)
        sol = simplex_solve(lp)
        expected = {0: "optimal", 2: "infeasible", 3: "unbounded"}[ref.status]
        assert sol.status.value == expected
        if expected == "optimal":
            assert sol.objective_value == pytest.approx(ref.fun, abs=1e-7)
            check_invariants(lp, sol)


def test_beale_cycling_example():
    c = [-0.75, 150.0, -0.02, 6.0]
    G = [[0.25, -60.0, -0.04, 9.0], [0.5, -90.0, -0.02, 3.0], [0.0, 0.0, 1.0, 0.0]]
    sol = simplex_solve(LPInstance.build(c, G, [0.0, 0.0, 1.0]), scale=False)
    assert sol.status is Status.OPTIMAL
    assert sol.objective_value == pytest.approx(-0.05)


def test_degenerate_instances_terminate(rng):
    for _ in range(1000):
        n, m = int(rng.integers(2, 7)), int(rng.integers(2, 6))
        A = rng.integers(-3, 4, size=(m, n)).astype(float)
        b = np.zeros(m)
        b[rng.random(m) < 0.3] = 1.0
        G = np.vstack([A, np.ones(n)])  # bounded: every vertex lives near the origin
        lp = LPInstance.build(rng.integers(-5, 6, size=n), G, np.append(b, 4.0))
        sol = simplex_solve(lp, stall_limit=int(rng.integers(0, 3)))
        assert sol.status is Status.OPTIMAL
        status, value = vertex_oracle(lp.objective, G, lp.g, np.zeros(m + 1, bool))
        assert status == "optimal" and abs(sol.objective_value - value) <= TOL


def test_invariants_on_optimal_solutions(rng):
    seen = 0
    while seen < 100:
        c, A, b, is_eq = random_lp(rng)
        lp = _lp_from(c, A, b, is_eq)
        sol = simplex_solve(lp)
        if sol.status is Status.OPTIMAL:
            check_invariants(lp, sol)
            seen += 1


def test_warm_start_reuses_basis(rng):
    done = 0
    while done < 30:
        c, A, b, is_eq = random_lp(rng)
        lp = _lp_from(c, A, b, is_eq)
        sol = simplex_solve(lp)
        if sol.status is not Status.OPTIMAL:
            continue
        warm = simplex_solve(lp, sol.basis)
        assert warm.objective_value == pytest.approx(sol.objective_value, abs=TOL)
        assert warm.iterations <= sol.iterations
        # perturbed costs: still correct when started from the old basis
        lp2 = lp.with_objective(lp.objective + rng.integers(-2, 3, size=lp.n_vars))
        ref = simplex_solve(lp2)
        again = simplex_solve(lp2, sol.basis)
        assert again.status is ref.status
        if ref.status is Status.OPTIMAL:
            assert again.objective_value == pytest.approx(ref.objective_value, abs=TOL)
        done += 1


def test_secondary_objective_breaks_ties():
    lp = LPInstance.build([-1.0, -1.0], [[1.0, 1.0]], [1.0])
    sol = simplex_solve(lp, secondary=np.array([1.0, 0.0]))
    assert np.allclose(sol.x, [0.0, 1.0])


def test_dimension_checks():
    with pytest.raises(ValueError):
        LPInstance.build([1.0, 2.0], [[1.0]], [1.0])
    with pytest.raises(ValueError):
        LPInstance.build([1.0], bounds=[(2.0, 1.0)])


def test_dump_is_readable(tmp_path):
    lp = LPInstance.build([1.0, -2.0], [[1.0, 1.0]], [3.0], [[1.0, -1.0]], [0.5], var_names=["a", "b"])
    text = dump_lp(lp, tmp_path / "lp.txt").read_text()
    assert text.startswith("LP 2 vars 1 ineq 1 eq")
    assert "INEQ" in text and "EQ" in text and " a " in text
