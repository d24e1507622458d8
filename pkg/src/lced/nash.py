"""Nash bargaining between the cost and emission objectives.

The search evaluates the normalized weighted-sum dispatch on a base grid of
weights, then repeatedly bisects between the two weights with the largest
Nash products until the products and the implied weight ratios agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .dispatch import HorizonDispatch, PeriodDispatch, extract_solution, solve_horizon, solve_period
from .errors import InfeasiblePeriodsError
from .grid import CaseData
from .lp import Status

VERTEX_RTOL = 1e-9
DUPLICATE_TOL = 1e-12
MIDPOINT_DECIMALS = 12


def _default_grid() -> tuple[float, ...]:
    return tuple(round(0.05 + 0.1 * k, 10) for k in range(10))


@dataclass(frozen=True)
class NashConfig:
    base_grid: tuple[float, ...] = field(default_factory=_default_grid)
    eps1_rel: float = 1e-4
    eps2: float = 0.02
    max_iters: int = 50
    convergence_mode: str = "both"  # "both" or "either"
    segment_refinement: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "base_grid", tuple(sorted(float(v) for v in self.base_grid)))
        if not self.base_grid or any(not 0.0 < v < 1.0 for v in self.base_grid):
            raise ValueError("base grid weights must lie strictly inside (0, 1)")
        if self.eps1_rel <= 0 or self.eps2 <= 0:
            raise ValueError("convergence tolerances must be positive")
        if self.convergence_mode not in ("both", "either"):
            raise ValueError("convergence_mode must be 'both' or 'either'")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")


@dataclass(frozen=True, eq=False)
class NashProblem:
    """Disagreement point and normalizers.

    ``d1`` is the cost of the emission-optimal endpoint and ``d2`` the
    emissions of the cost-optimal endpoint; they double as the normalizers.
    """

    d1: float
    d2: float
    c_norm: float
    e_norm: float
    low_carbon: HorizonDispatch | None = None  # x*(0)
    low_cost: HorizonDispatch | None = None  # x*(1)

    @property
    def norms(self) -> tuple[float, float]:
        return self.c_norm, self.e_norm


def nash_product(cost: float, emissions: float, problem: NashProblem) -> float:
    """``(d1 - cost) * (d2 - emissions)``; negative only outside the bargaining box."""
    return (problem.d1 - cost) * (problem.d2 - emissions)


def _lexicographic_period(case: CaseData, t: int, primary: str) -> PeriodDispatch:
    """Optimize one objective, then the other over the first one's optimal face."""
    sol, vm = solve_period(case, t, 0.0 if primary == "emissions" else 1.0)
    if sol.status is not Status.OPTIMAL:
        raise InfeasiblePeriodsError([t])
    return extract_solution(sol, vm, case, t)


def _lexicographic(case: CaseData, primary: str) -> HorizonDispatch:
    periods, bad = [], []
    for t in range(case.horizon):
        try:
            periods.append(_lexicographic_period(case, t, primary))
        except InfeasiblePeriodsError:
            bad.append(t)
    if bad:
        raise InfeasiblePeriodsError(bad)
    return HorizonDispatch.from_periods(periods)


def disagreement_points(case: CaseData) -> NashProblem:
    """Lexicographic Pareto endpoints and the resulting disagreement point."""
    low_carbon = _lexicographic(case, "emissions")
    low_cost = _lexicographic(case, "cost")
    d1, d2 = low_carbon.total_cost, low_cost.total_emissions
    # a zero normalizer means that objective is identically zero; any positive value works
    return NashProblem(d1, d2, d1 if d1 > 0 else 1.0, d2 if d2 > 0 else 1.0, low_carbon, low_cost)


def effective_carbon_price(lam: float, problem: NashProblem) -> tuple[float, float]:
    """Weight ratio ``(1-lam)/lam`` and its value in currency per ton.

    With normalized objectives, the weighted sum ``lam*C/C_norm + (1-lam)*E/E_norm``
    prices one ton at ``(1-lam)/lam * C_norm/E_norm`` units of cost.
    """
    if not 0.0 < lam < 1.0:
        raise ValueError(f"carbon price needs lambda in (0, 1), got {lam}")
    ratio = (1.0 - lam) / lam
    return ratio, ratio * problem.c_norm / problem.e_norm


def _cost_em(p) -> tuple[float, float]:
    if hasattr(p, "cost"):
        return float(p.cost), float(p.emissions)
    return float(p[0]), float(p[1])


@dataclass(frozen=True)
class RefinedPoint:
    cost: float
    emissions: float
    s: float  # weight on the second vertex
    F: float
    lam_a: float = math.nan
    lam_b: float = math.nan


def segment_refine(pA, pB, problem: NashProblem) -> RefinedPoint:
    """Best Nash product on the segment between two frontier vertices.

    The product along ``(1-s)*pA + s*pB`` is a quadratic in ``s``; the
    maximizer is its stationary point clamped to [0, 1], or an end point.
    """
    cA, eA = _cost_em(pA)
    cB, eB = _cost_em(pB)
    a, b = problem.d1 - cA, cB - cA
    c, d = problem.d2 - eA, eB - eA
    # F(s) = (a - b s)(c - d s)
    candidates = [0.0, 1.0]
    curv = b * d
    if curv != 0.0:
        candidates.append(min(1.0, max(0.0, (a * d + b * c) / (2.0 * curv))))

    def at(s: float) -> tuple[float, float, float]:
        cost = (1.0 - s) * cA + s * cB
        em = (1.0 - s) * eA + s * eB
        return cost, em, nash_product(cost, em, problem)

    best_s = max(sorted(set(candidates)), key=lambda s: (at(s)[2], -s))
    cost, em, F = at(best_s)
    return RefinedPoint(cost, em, best_s, F,
                        getattr(pA, "lam", math.nan), getattr(pB, "lam", math.nan))


@dataclass(frozen=True, eq=False)
class Evaluation:
    lam: float
    cost: float
    emissions: float
    F: float
    phase: str = "base"  # endpoint, base or iteration-k
    iteration: int = 0
    dispatch: HorizonDispatch | None = field(default=None, repr=False)


@dataclass(frozen=True)
class Step:
    iteration: int
    lam1: float
    lam2: float
    F1: float
    F2: float
    f_converged: bool
    ratio_converged: bool


@dataclass
class IterationTrace:
    evaluations: list[Evaluation] = field(default_factory=list)
    steps: list[Step] = field(default_factory=list)
    converged_by: tuple[str, ...] = ()
    converged: bool = False
    degenerate: bool = False

    @property
    def iterates(self) -> list[float]:
        """Midpoint weights in evaluation order."""
        return [e.lam for e in self.evaluations if e.phase.startswith("iteration")]

    @property
    def iterations(self) -> int:
        return len(self.iterates)


@dataclass(frozen=True, eq=False)
class NashResult:
    lam_star: float
    F_star: float
    cost: float
    emissions: float
    dispatch: HorizonDispatch | None
    carbon_price_normalized: float | None
    carbon_price_physical: float | None
    converged: bool
    degenerate: bool
    iterations: int
    problem: NashProblem | None = None
    refined_point: RefinedPoint | None = None


def _ratio(lam: float) -> float:
    return (1.0 - lam) / lam if lam > 0 else math.inf


def _midpoint(a: float, b: float) -> float:
    # rounding keeps dyadic steps from decimal weights exact (0.45/0.4625 -> 0.45625)
    return round(0.5 * (a + b), MIDPOINT_DECIMALS)


def _top_two(pool: Sequence[Evaluation]) -> tuple[Evaluation, Evaluation]:
    ranked = sorted(pool, key=lambda e: (-e.F, e.lam))
    return ranked[0], ranked[1] if len(ranked) > 1 else ranked[0]


def weight_search(evaluate: Callable[[float], Evaluation], cfg: NashConfig,
                  endpoints: Sequence[Evaluation] = (), f_scale: float = 1.0
                  ) -> tuple[Evaluation, IterationTrace]:
    """Bisection over weights driven by an arbitrary evaluator.

    ``evaluate(lam)`` returns the :class:`Evaluation` at ``lam``.  Endpoint
    evaluations (the disagreement solutions) are recorded in the trace but are
    not candidates.  ``f_scale`` sets the magnitude below which every product
    counts as zero (degenerate frontier).
    """
    trace = IterationTrace(evaluations=list(endpoints))
    pool: list[Evaluation] = []
    for lam in cfg.base_grid:
        ev = evaluate(lam)
        pool.append(_tag(ev, "base", 0))
    trace.evaluations.extend(pool)

    if max(e.F for e in pool) <= 1e-12 * abs(f_scale):
        trace.degenerate = True
        return _top_two(pool)[0], trace

    it = 0
    while True:
        e1, e2 = _top_two(pool)
        f_ok = abs(e1.F - e2.F) <= cfg.eps1_rel * e1.F
        r_ok = abs(_ratio(e1.lam) - _ratio(e2.lam)) <= cfg.eps2
        trace.steps.append(Step(it, e1.lam, e2.lam, e1.F, e2.F, f_ok, r_ok))
        done = (f_ok and r_ok) if cfg.convergence_mode == "both" else (f_ok or r_ok)
        if done:
            trace.converged = True
            trace.converged_by = tuple(n for n, ok in (("F", f_ok), ("ratio", r_ok)) if ok)
            return e1, trace
        if it >= cfg.max_iters:
            return e1, trace
        lam = _midpoint(e1.lam, e2.lam)
        while any(abs(lam - e.lam) <= DUPLICATE_TOL for e in pool):
            nxt = _midpoint(e1.lam, lam)
            if abs(nxt - e1.lam) <= DUPLICATE_TOL:
                return e1, trace  # bracket collapsed without meeting the criteria
            lam = nxt
        it += 1
        ev = _tag(evaluate(lam), f"iteration-{it}", it)
        pool.append(ev)
        trace.evaluations.append(ev)


def _tag(ev: Evaluation, phase: str, iteration: int) -> Evaluation:
    return Evaluation(ev.lam, ev.cost, ev.emissions, ev.F, phase, iteration, ev.dispatch)


def _vertex_groups(evals: Sequence[Evaluation]) -> list[list[Evaluation]]:
    groups: list[list[Evaluation]] = []
    for ev in sorted(evals, key=lambda e: e.lam):
        if groups:
            last = groups[-1][-1]
            tc = VERTEX_RTOL * max(abs(last.cost), abs(ev.cost), 1.0)
            te = VERTEX_RTOL * max(abs(last.emissions), abs(ev.emissions), 1.0)
            if abs(last.cost - ev.cost) <= tc and abs(last.emissions - ev.emissions) <= te:
                groups[-1].append(ev)
                continue
        groups.append([ev])
    return groups


def refine_around(best: Evaluation, evaluations: Sequence[Evaluation], problem: NashProblem
                  ) -> RefinedPoint | None:
    """Segment refinement between the incumbent vertex and its evaluated neighbors."""
    groups = _vertex_groups(evaluations)
    k = next(i for i, grp in enumerate(groups) if any(e is best or e.lam == best.lam for e in grp))
    options = []
    for j in (k - 1, k + 1):
        if 0 <= j < len(groups):
            a, b = (groups[j][-1], best) if j < k else (best, groups[j][0])
            options.append(segment_refine(a, b, problem))
    if not options:
        return None
    ref = max(options, key=lambda r: r.F)
    if ref.F <= best.F + 1e-12 * max(1.0, abs(problem.d1 * problem.d2)) or ref.s in (0.0, 1.0):
        return None
    return ref


def dynamic_weight_search(case: CaseData, cfg: NashConfig | None = None, workers=1,
                          problem: NashProblem | None = None) -> tuple[NashResult, IterationTrace]:
    """Nash bargaining weight search on a case."""
    cfg = cfg or NashConfig()
    problem = problem or disagreement_points(case)
    norms = problem.norms

    def evaluate(lam: float) -> Evaluation:
        hd = solve_horizon(case, lam, norms, workers=workers)
        return Evaluation(lam, hd.total_cost, hd.total_emissions,
                          nash_product(hd.total_cost, hd.total_emissions, problem), dispatch=hd)

    ends = []
    for lam, hd in ((0.0, problem.low_carbon), (1.0, problem.low_cost)):
        ends.append(Evaluation(lam, hd.total_cost, hd.total_emissions,
                               nash_product(hd.total_cost, hd.total_emissions, problem),
                               "endpoint", 0, hd))
    best, trace = weight_search(evaluate, cfg, ends, f_scale=problem.d1 * problem.d2)

    refined = None
    if cfg.segment_refinement:
        refined = refine_around(best, trace.evaluations, problem)
    ratio = phys = None
    if 0.0 < best.lam < 1.0 and not trace.degenerate:
        ratio, phys = effective_carbon_price(best.lam, problem)
    result = NashResult(best.lam, best.F, best.cost, best.emissions, best.dispatch, ratio, phys,
                        trace.converged, trace.degenerate, trace.iterations, problem, refined)
    return result, trace

