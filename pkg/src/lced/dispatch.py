"""Per-period DC-power-flow dispatch LPs with a scalarized cost/emission objective."""

from __future__ import annotations

import os
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InfeasiblePeriodsError, NotOptimalError
from .grid import CaseData, effective_unit_bounds, reference_nodes
from .lp import SETTINGS, LPInstance, LPSolution, Status, simplex_solve

Norms = tuple[float, float]
RAW_NORMS: Norms = (1.0, 1.0)


@dataclass(frozen=True)
class VarMap:
    """Column layout of one period: units, then node angles, then DC lines."""

    t: int
    offset: int
    n_units: int
    n_nodes: int
    n_dc: int
    ref_nodes: tuple[int, ...]

    @property
    def n_vars(self) -> int:
        return self.n_units + self.n_nodes + self.n_dc

    @property
    def unit_cols(self) -> np.ndarray:
        return self.offset + np.arange(self.n_units)

    @property
    def angle_cols(self) -> np.ndarray:
        return self.offset + self.n_units + np.arange(self.n_nodes)

    @property
    def dc_cols(self) -> np.ndarray:
        return self.offset + self.n_units + self.n_nodes + np.arange(self.n_dc)

    def unit_col(self, i: int) -> int:
        return self.offset + i

    def angle_col(self, r: int) -> int:
        return self.offset + self.n_units + r

    def dc_col(self, k: int) -> int:
        return self.offset + self.n_units + self.n_nodes + k


@dataclass(frozen=True, eq=False)
class PeriodDispatch:
    t: int
    unit_output: np.ndarray  # MW per unit, case order
    angles: np.ndarray  # rad per node
    dc_flows: np.ndarray  # MW per DC line
    ac_flows: np.ndarray  # MW per AC line, positive from -> to
    cost: float
    emissions: float
    objective: float = float("nan")  # scalarized LP value


@dataclass(frozen=True, eq=False)
class HorizonDispatch:
    periods: tuple[PeriodDispatch, ...]
    total_cost: float
    total_emissions: float
    objective: float = float("nan")

    @classmethod
    def from_periods(cls, periods: Sequence[PeriodDispatch]) -> HorizonDispatch:
        periods = tuple(sorted(periods, key=lambda p: p.t))
        return cls(periods, float(sum(p.cost for p in periods)),
                   float(sum(p.emissions for p in periods)),
                   float(sum(p.objective for p in periods)))


def unit_objective(case: CaseData, lam: float, norms: Norms = RAW_NORMS) -> np.ndarray:
    """Per-unit scalarized coefficient ``lam*c/C + (1-lam)*e/E``."""
    c_norm, e_norm = norms
    if c_norm <= 0 or e_norm <= 0:
        raise ValueError("normalizers must be strictly positive")
    c = np.array([u.cost_coeff for u in case.units])
    e = np.array([u.emission_coeff for u in case.units])
    return lam * c / c_norm + (1.0 - lam) * e / e_norm


def susceptance_laplacian(case: CaseData) -> np.ndarray:
    """Nodal admittance (Laplacian) of the AC lines, per unit."""
    n = len(case.nodes)
    Y = np.zeros((n, n))
    for ln in case.ac_lines:
        f, t, b = ln.from_node, ln.to_node, ln.susceptance
        Y[f, f] += b
        Y[t, t] += b
        Y[f, t] -= b
        Y[t, f] -= b
    return Y


def _period_blocks(case: CaseData, t: int, offset: int = 0):
    n_u, n_n, n_dc = len(case.units), len(case.nodes), len(case.dc_lines)
    vm = VarMap(t, offset, n_u, n_n, n_dc, tuple(reference_nodes(case)))
    n = vm.n_vars
    sb = case.s_base

    # nodal balance: sum p_g - s_base*Y*theta - W_dc p_dc = load
    H = np.zeros((n_n, n))
    for i, u in enumerate(case.units):
        H[u.node_id, i] = 1.0
    H[:, n_u:n_u + n_n] = -sb * susceptance_laplacian(case)
    for k, ln in enumerate(case.dc_lines):
        H[ln.from_node, n_u + n_n + k] = -1.0
        H[ln.to_node, n_u + n_n + k] = 1.0
    h = case.load[:, t].astype(float)

    # AC limits on s_base*b*(theta_f - theta_t), both directions
    G = np.zeros((2 * len(case.ac_lines), n))
    g = np.zeros(2 * len(case.ac_lines))
    for k, ln in enumerate(case.ac_lines):
        coeff = sb * ln.susceptance
        G[2 * k, n_u + ln.from_node] = coeff
        G[2 * k, n_u + ln.to_node] = -coeff
        G[2 * k + 1] = -G[2 * k]
        g[2 * k] = g[2 * k + 1] = ln.capacity

    lo = np.full(n, -np.inf)
    hi = np.full(n, np.inf)
    for i, u in enumerate(case.units):
        lo[i], hi[i] = effective_unit_bounds(case, u.id, t)
    for r in vm.ref_nodes:
        lo[n_u + r] = hi[n_u + r] = 0.0
    for k, ln in enumerate(case.dc_lines):
        lo[n_u + n_n + k], hi[n_u + n_n + k] = 0.0, ln.capacity

    names = ([f"pg[{u.id},{t}]" for u in case.units] + [f"theta[{r},{t}]" for r in range(n_n)]
             + [f"pdc[{ln.id},{t}]" for ln in case.dc_lines])
    return vm, G, g, H, h, lo, hi, names


def build_period_lp(case: CaseData, t: int, lam: float, norms: Norms = RAW_NORMS) -> tuple[LPInstance, VarMap]:
    """LP of period ``t`` with objective weight ``lam`` on normalized cost."""
    if not 0 <= t < case.horizon:
        raise IndexError(f"period {t} outside horizon {case.horizon}")
    vm, G, g, H, h, lo, hi, names = _period_blocks(case, t)
    c = np.zeros(vm.n_vars)
    c[: vm.n_units] = unit_objective(case, lam, norms)
    return LPInstance(c, G, g, H, h, lo, hi, tuple(names)), vm


def objective_vectors(case: CaseData, vm: VarMap, n_vars: int, norms: Norms = RAW_NORMS):
    """Normalized cost and emission vectors over an LP's columns."""
    c_norm, e_norm = norms
    c_vec = np.zeros(n_vars)
    e_vec = np.zeros(n_vars)
    c_vec[vm.unit_cols] = [u.cost_coeff / c_norm for u in case.units]
    e_vec[vm.unit_cols] = [u.emission_coeff / e_norm for u in case.units]
    return c_vec, e_vec


def build_horizon_lp(case: CaseData, lam: float, norms: Norms = RAW_NORMS) -> tuple[LPInstance, list[VarMap]]:
    """Single block-diagonal LP stacking every period of the horizon."""
    blocks = []
    offset = 0
    for t in range(case.horizon):
        blk = _period_blocks(case, t, offset)
        blocks.append(blk)
        offset += blk[0].n_vars
    n = offset
    Gs, gs, Hs, hs = [], [], [], []
    lo, hi, names = np.empty(n), np.empty(n), []
    c = np.zeros(n)
    w = unit_objective(case, lam, norms)
    for vm, G, g, H, h, l, u, nm in blocks:
        sl = slice(vm.offset, vm.offset + vm.n_vars)
        Gp = np.zeros((G.shape[0], n))
        Gp[:, sl] = G
        Hp = np.zeros((H.shape[0], n))
        Hp[:, sl] = H
        Gs.append(Gp)
        gs.append(g)
        Hs.append(Hp)
        hs.append(h)
        lo[sl], hi[sl] = l, u
        c[vm.unit_cols] = w
        names += nm
    lp = LPInstance(c, np.vstack(Gs), np.concatenate(gs), np.vstack(Hs), np.concatenate(hs), lo, hi, tuple(names))
    return lp, [b[0] for b in blocks]


def extract_solution(sol: LPSolution, vm: VarMap, case: CaseData, t: int | None = None) -> PeriodDispatch:
    """Decode an optimal LP solution into dispatch quantities (raw cost and emissions)."""
    t = vm.t if t is None else t
    if sol.status is not Status.OPTIMAL:
        raise NotOptimalError(sol.status.value, t)
    x = sol.x
    p = x[vm.unit_cols].copy()
    theta = x[vm.angle_cols].copy()
    dc = x[vm.dc_cols].copy()
    ac = np.array([case.s_base * ln.susceptance * (theta[ln.from_node] - theta[ln.to_node])
                   for ln in case.ac_lines])
    cost = float(sum(u.cost_coeff * p[i] for i, u in enumerate(case.units)))
    emissions = float(sum(u.emission_coeff * p[i] for i, u in enumerate(case.units)))
    obj = float(sol.objective_value) if len(x) == vm.n_vars else float("nan")
    return PeriodDispatch(t, p, theta, dc, ac, cost, emissions, obj)


def solve_period(case: CaseData, t: int, lam: float, norms: Norms = RAW_NORMS,
                 warm_basis=None) -> tuple[LPSolution, VarMap]:
    """Solve one period.  At ``lam`` 0 or 1 ties are broken by the other objective,
    so the endpoint dispatches are Pareto optimal rather than merely optimal."""
    lp, vm = build_period_lp(case, t, lam, norms)
    secondary = None
    if lam in (0.0, 1.0):
        secondary = np.zeros(vm.n_vars)
        secondary[vm.unit_cols] = unit_objective(case, 1.0 - lam, norms)
    return simplex_solve(lp, warm_basis, secondary=secondary), vm


def _solve_one(args) -> tuple[int, LPSolution, VarMap]:
    case, t, lam, norms, settings = args
    if settings != SETTINGS:  # worker processes may not inherit CLI overrides
        SETTINGS.__dict__.update(settings.__dict__)
    sol, vm = solve_period(case, t, lam, norms)
    return t, sol, vm


def solve_horizon(case: CaseData, lam: float, norms: Norms = RAW_NORMS,
                  workers: int | Executor = 1) -> HorizonDispatch:
    """Solve every period independently and aggregate the totals.

    ``workers`` is a process count or an existing executor to reuse.
    """
    jobs = [(case, t, lam, norms, SETTINGS) for t in range(case.horizon)]
    if isinstance(workers, Executor) and case.horizon > 1:
        results = list(workers.map(_solve_one, jobs))
    elif isinstance(workers, int) and workers > 1 and case.horizon > 1:
        with ProcessPoolExecutor(max_workers=min(workers, os.cpu_count() or 1)) as ex:
            results = list(ex.map(_solve_one, jobs))
    else:
        results = [_solve_one(j) for j in jobs]
    bad = [t for t, sol, _ in results if sol.status is not Status.OPTIMAL]
    if bad:
        raise InfeasiblePeriodsError(bad)
    return HorizonDispatch.from_periods([extract_solution(sol, vm, case, t) for t, sol, vm in results])


def feasibility_report(case: CaseData, dispatch: PeriodDispatch) -> dict[str, float]:
    """Worst violations of the hard constraints (all zero for an exact dispatch)."""
    t = dispatch.t
    n = len(case.nodes)
    injection = np.zeros(n)
    for i, u in enumerate(case.units):
        injection[u.node_id] += dispatch.unit_output[i]
    for k, ln in enumerate(case.dc_lines):
        injection[ln.from_node] -= dispatch.dc_flows[k]
        injection[ln.to_node] += dispatch.dc_flows[k]
    for k, ln in enumerate(case.ac_lines):
        injection[ln.from_node] -= dispatch.ac_flows[k]
        injection[ln.to_node] += dispatch.ac_flows[k]
    balance = float(np.abs(injection - case.load[:, t]).max(initial=0.0))
    ac = max((abs(f) - ln.capacity for f, ln in zip(dispatch.ac_flows, case.ac_lines)), default=0.0)
    dc = max((max(-f, f - ln.capacity) for f, ln in zip(dispatch.dc_flows, case.dc_lines)), default=0.0)
    unit = 0.0
    for i, u in enumerate(case.units):
        lo, hi = effective_unit_bounds(case, u.id, t)
        unit = max(unit, lo - dispatch.unit_output[i], dispatch.unit_output[i] - hi)
    return {"balance": balance, "ac_capacity": max(ac, 0.0), "dc_capacity": max(dc, 0.0),
            "unit_bounds": max(unit, 0.0)}


def max_violation(case: CaseData, dispatch: HorizonDispatch | PeriodDispatch) -> float:
    periods = dispatch.periods if isinstance(dispatch, HorizonDispatch) else (dispatch,)
    return max(max(feasibility_report(case, p).values()) for p in periods)
