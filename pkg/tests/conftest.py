from __future__ import annotations

import itertools

import numpy as np
import pytest
from scipy.optimize import linprog

from lced.dispatch import build_period_lp, max_violation
from lced.grid import AcLine, CaseData, DcLine, Node, Unit, UnitKind

FEAS_TOL = 1e-6

_KINDS = [UnitKind.THERMAL, UnitKind.GAS, UnitKind.HYDRO, UnitKind.NUCLEAR, UnitKind.WIND, UnitKind.PV]
_EMISSION = {UnitKind.THERMAL: (0.8, 1.1), UnitKind.GAS: (0.35, 0.6), UnitKind.HYDRO: (0.0, 0.05),
             UnitKind.NUCLEAR: (0.0, 0.02), UnitKind.WIND: (0.0, 0.0), UnitKind.PV: (0.0, 0.0)}


def assert_feasible(case: CaseData, dispatch, tol: float = FEAS_TOL) -> float:
    v = max_violation(case, dispatch)
    assert v <= tol, f"dispatch violates constraints by {v}"
    return v


def linprog_solve(lp):
    """Reference solve of an LPInstance with HiGHS."""
    bounds = [(None if not np.isfinite(l) else l, None if not np.isfinite(u) else u)
              for l, u in zip(lp.lo, lp.hi)]
    return linprog(lp.objective, A_ub=lp.G if len(lp.g) else None, b_ub=lp.g if len(lp.g) else None,
                   A_eq=lp.H if len(lp.h) else None, b_eq=lp.h if len(lp.h) else None,
                   bounds=bounds, method="highs")


def random_case(rng: np.random.Generator, n_nodes: int = 4, horizon: int = 1,
                with_dc: bool | None = None, max_tries: int = 50) -> CaseData:
    """Random connected case that is feasible in every period (checked with HiGHS)."""
    for _ in range(max_tries):
        n_units = int(rng.integers(n_nodes, 2 * n_nodes + 1))
        units = []
        for i in range(n_units):
            kind = _KINDS[int(rng.integers(len(_KINDS)))]
            e_lo, e_hi = _EMISSION[kind]
            p_max = float(rng.integers(40, 200))
            p_min = float(rng.integers(0, 20)) if kind in (UnitKind.THERMAL, UnitKind.NUCLEAR) else 0.0
            units.append(Unit(i, int(rng.integers(n_nodes)), kind, float(np.round(rng.uniform(5, 90), 3)),
                              float(np.round(rng.uniform(e_lo, e_hi), 4)), p_min, p_max))
        lines = []
        order = rng.permutation(n_nodes)
        for k in range(1, n_nodes):  # random spanning tree keeps one island
            a, b = int(order[k]), int(order[rng.integers(k)])
            lines.append((a, b))
        extra = [p for p in itertools.combinations(range(n_nodes), 2)
                 if p not in lines and p[::-1] not in lines]
        for j in rng.permutation(len(extra))[: int(rng.integers(0, len(extra) + 1))]:
            lines.append(extra[j])
        ac = tuple(AcLine(k, a, b, float(np.round(rng.uniform(5, 20), 2)), float(rng.integers(30, 160)))
                   for k, (a, b) in enumerate(lines))
        use_dc = bool(rng.integers(2)) if with_dc is None else with_dc
        dc = ()
        if use_dc and n_nodes > 1:
            a, b = rng.choice(n_nodes, 2, replace=False)
            dc = (DcLine(0, int(a), int(b), float(rng.integers(20, 100))),)
        load = np.round(rng.uniform(0, 80, size=(n_nodes, horizon)), 2)
        avail = np.ones((n_units, horizon))
        for i, u in enumerate(units):
            if u.kind in (UnitKind.WIND, UnitKind.PV):
                avail[i] = np.round(rng.uniform(0.1, 1.0, size=horizon), 3)
        case = CaseData(tuple(Node(r, f"n{r}") for r in range(n_nodes)), tuple(units), ac, dc, load, avail)
        if all(linprog_solve(build_period_lp(case, t, 0.5)[0]).status == 0 for t in range(horizon)):
            return case
    raise RuntimeError("could not draw a feasible random case")


def random_lp(rng: np.random.Generator, n_max: int = 6, m_max: int = 4):
    """Small integer LP ``min c'x, A x (<=|=) b, x >= 0`` with coefficients in [-9, 9]."""
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    A = rng.integers(-9, 10, size=(m, n)).astype(float)
    b = rng.integers(-9, 10, size=m).astype(float)
    c = rng.integers(-9, 10, size=n).astype(float)
    is_eq = rng.random(m) < 0.25
    return c, A, b, is_eq


def _vertices(A_eq: np.ndarray, b_eq: np.ndarray) -> list[np.ndarray]:
    """All basic feasible solutions of ``A_eq y = b_eq, y >= 0`` by brute force."""
    m, n = A_eq.shape
    out = []
    rank = np.linalg.matrix_rank(A_eq)
    keep = []
    for i in range(m):  # drop redundant rows so bases have full size
        if np.linalg.matrix_rank(A_eq[keep + [i]]) > len(keep):
            keep.append(i)
    A_r, b_r = A_eq[keep], b_eq[keep]
    if np.linalg.matrix_rank(np.column_stack([A_eq, b_eq])) > rank:
        return out  # inconsistent system
    for cols in itertools.combinations(range(n), len(keep)):
        B = A_r[:, cols]
        if abs(np.linalg.det(B)) < 1e-9:
            continue
        yb = np.linalg.solve(B, b_r)
        if np.all(yb >= -1e-9):
            y = np.zeros(n)
            y[list(cols)] = yb
            out.append(y)
    return out


def vertex_oracle(c, A, b, is_eq) -> tuple[str, float | None]:
    """(status, objective) by vertex enumeration; unboundedness via extreme rays."""
    m, n = A.shape
    ineq = ~is_eq
    S = np.zeros((m, int(ineq.sum())))
    S[np.flatnonzero(ineq), np.arange(int(ineq.sum()))] = 1.0
    M = np.hstack([A, S])
    verts = _vertices(M, b)
    if not verts:
        return "infeasible", None
    # recession cone {d >= 0, M d = 0} normalized by sum(d) = 1
    R = np.vstack([M, np.ones(M.shape[1])])
    rays = _vertices(R, np.concatenate([np.zeros(m), [1.0]]))
    if any(c @ d[:n] < -1e-9 for d in rays):
        return "unbounded", None
    return "optimal", min(float(c @ y[:n]) for y in verts)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def highs_horizon(case: CaseData, lam: float, norms) -> tuple[float, float]:
    """(cost, emissions) of the weighted-sum optimum from one stacked HiGHS solve."""
    from lced.dispatch import build_horizon_lp

    lp, vms = build_horizon_lp(case, lam, norms)
    res = linprog_solve(lp)
    assert res.status == 0
    cost = em = 0.0
    for vm in vms:
        p = res.x[vm.unit_cols]
        cost += sum(u.cost_coeff * p[i] for i, u in enumerate(case.units))
        em += sum(u.emission_coeff * p[i] for i, u in enumerate(case.units))
    return float(cost), float(em)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
