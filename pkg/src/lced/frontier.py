"""Pareto frontiers: weighted-sum scanning and exact parametric enumeration."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .dispatch import RAW_NORMS, Norms, build_period_lp, objective_vectors, solve_horizon
from .errors import InfeasibleError, InfeasiblePeriodsError
from .grid import CaseData
from .parametric import CriticalRegion, enumerate_regions, to_parametric_form

BREAKPOINT_BAND = 1e-9
DOMINANCE_RTOL = 1e-6


@dataclass(frozen=True)
class FrontierPoint:
    lam: float
    cost: float
    emissions: float
    scalarized: float


def scalarize(lam: float, cost: float, emissions: float, norms: Norms) -> float:
    return lam * cost / norms[0] + (1.0 - lam) * emissions / norms[1]


def scan_frontier(case: CaseData, lambdas: Iterable[float], norms: Norms = RAW_NORMS,
                  workers=1) -> list[FrontierPoint]:
    """One weighted-sum horizon solve per ``lam``; points come back sorted by ``lam``."""
    points = []
    for lam in sorted(set(float(v) for v in lambdas)):
        if not 0.0 <= lam <= 1.0:
            raise ValueError(f"lambda={lam} outside [0, 1]")
        hd = solve_horizon(case, lam, norms, workers=workers)
        points.append(FrontierPoint(lam, hd.total_cost, hd.total_emissions,
                                    scalarize(lam, hd.total_cost, hd.total_emissions, norms)))
    return points


@dataclass(frozen=True)
class Segment:
    lam_lo: float
    lam_hi: float
    cost: float
    emissions: float
    alpha: float  # horizon value on the segment is alpha + beta*lam
    beta: float


@dataclass(frozen=True, eq=False)
class PiecewiseFrontier:
    """Exact frontier over the whole horizon.

    ``segments[k]`` spans ``[breakpoints[k], breakpoints[k+1]]``; its
    (cost, emissions) pair is the sum of the per-period vertex solutions on
    that interval.  ``period_regions`` keeps the per-period critical regions.
    """

    breakpoints: tuple[float, ...]
    segments: tuple[Segment, ...]
    period_regions: tuple[tuple[CriticalRegion, ...], ...]
    norms: Norms

    def segment_at(self, lam: float) -> Segment:
        if not 0.0 <= lam <= 1.0:
            raise ValueError(f"lambda={lam} outside [0, 1]")
        k = int(np.searchsorted(self.breakpoints, lam, side="right")) - 1
        return self.segments[min(max(k, 0), len(self.segments) - 1)]

    def at(self, lam: float) -> tuple[float, float]:
        seg = self.segment_at(lam)
        return seg.cost, seg.emissions

    def value(self, lam: float) -> float:
        seg = self.segment_at(lam)
        return seg.alpha + seg.beta * lam

    def on_breakpoint(self, lam: float, band: float = BREAKPOINT_BAND) -> bool:
        return bool(np.min(np.abs(np.asarray(self.breakpoints) - lam)) <= band)

    def points(self) -> list[FrontierPoint]:
        """One frontier vertex per segment, tagged with the segment midpoint."""
        out = []
        for s in self.segments:
            mid = 0.5 * (s.lam_lo + s.lam_hi)
            out.append(FrontierPoint(mid, s.cost, s.emissions, scalarize(mid, s.cost, s.emissions, self.norms)))
        return out


def period_regions(case: CaseData, t: int, norms: Norms = RAW_NORMS) -> list[CriticalRegion]:
    """Critical regions in ``lam`` of the period-``t`` LP."""
    lp, vm = build_period_lp(case, t, 0.5, norms)
    c_vec, e_vec = objective_vectors(case, vm, lp.n_vars, norms)
    return enumerate_regions(to_parametric_form(lp, c_vec, e_vec))


def _raw_pair(case: CaseData, x: np.ndarray) -> tuple[float, float]:
    n_u = len(case.units)
    p = x[:n_u]
    cost = float(sum(u.cost_coeff * p[i] for i, u in enumerate(case.units)))
    em = float(sum(u.emission_coeff * p[i] for i, u in enumerate(case.units)))
    return cost, em


def _merge_points(values: Sequence[float], tol: float = 1e-12) -> list[float]:
    out: list[float] = []
    for v in sorted(values):
        if not out or v - out[-1] > tol:
            out.append(v)
    out[0], out[-1] = 0.0, 1.0
    return out


def exact_frontier(case: CaseData, norms: Norms = RAW_NORMS) -> PiecewiseFrontier:
    """Exact piecewise frontier from per-period critical-region enumeration."""
    per_period = []
    bad = []
    for t in range(case.horizon):
        try:
            per_period.append(tuple(period_regions(case, t, norms)))
        except InfeasibleError:
            bad.append(t)
    if bad:
        raise InfeasiblePeriodsError(bad)

    bps = _merge_points([0.0, 1.0] + [r.theta_hi for regs in per_period for r in regs])
    pairs = [[_raw_pair(case, r.x) for r in regs] for regs in per_period]
    segments = []
    for lo, hi in zip(bps[:-1], bps[1:]):
        mid = 0.5 * (lo + hi)
        cost = em = alpha = beta = 0.0
        for regs, prs in zip(per_period, pairs):
            k = next(i for i, r in enumerate(regs) if r.theta_lo <= mid <= r.theta_hi)
            cost += prs[k][0]
            em += prs[k][1]
            alpha += regs[k].alpha
            beta += regs[k].beta
        segments.append(Segment(lo, hi, cost, em, alpha, beta))
    return PiecewiseFrontier(tuple(bps), tuple(segments), tuple(per_period), norms)


def check_dominance(points: Sequence, rtol: float = DOMINANCE_RTOL) -> list[tuple[int, int]]:
    """Every ordered pair ``(i, j)`` with point ``i`` dominated by point ``j``.

    Points need ``cost`` and ``emissions`` attributes or are ``(cost, emissions)``
    pairs.  Differences within ``rtol`` (relative) count as ties.
    """
    pairs = [(p.cost, p.emissions) if hasattr(p, "cost") else (float(p[0]), float(p[1])) for p in points]
    out = []
    for i, (ci, ei) in enumerate(pairs):
        for j, (cj, ej) in enumerate(pairs):
            if i == j:
                continue
            tc = rtol * max(abs(ci), abs(cj), 1.0)
            te = rtol * max(abs(ei), abs(ej), 1.0)
            no_worse = cj <= ci + tc and ej <= ei + te
            better = cj < ci - tc or ej < ei - te
            if no_worse and better:
                out.append((i, j))
    return out
