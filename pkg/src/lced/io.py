"""Result files: CSV exports and result.json, all numbers at 12 significant digits."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

from .dispatch import HorizonDispatch
from .frontier import FrontierPoint, PiecewiseFrontier
from .grid import CaseData
from .nash import IterationTrace, NashResult
from .parametric import CriticalRegion

SCHEMAS = {
    "frontier.csv": ("lambda", "cost", "emissions", "scalarized"),
    "breakpoints.csv": ("lambda_lo", "lambda_hi", "cost", "emissions"),
    "trace.csv": ("phase", "iter", "lambda", "cost", "emissions", "F"),
    "regions.csv": ("lambda_lo", "lambda_hi", "value_alpha", "value_beta"),
    "dispatch.csv": ("t", "element", "id", "value_mw"),
}
_TEXT_COLUMNS = {"phase", "element"}
_INT_COLUMNS = {"iter", "t", "id"}


def fmt(x: float) -> str:
    x = float(x)
    if x == 0.0:
        return "0"  # avoid "-0"
    return format(x, ".12g")


def _round(obj: Any) -> Any:
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return None
        return float(fmt(obj))
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def write_json(path: Path, payload: dict) -> Path:
    path.write_text(json.dumps(_round(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _write_csv(path: Path, rows: Iterable[Sequence[object]]) -> Path:
    header = SCHEMAS[path.name]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    return path


def read_csv(path: str | Path) -> list[dict[str, Any]]:
    """Parse one of the exported CSV files, enforcing its documented header."""
    path = Path(path)
    expected = SCHEMAS[path.name]
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != expected:
            raise ValueError(f"{path.name}: header {header} != {expected}")
        out = []
        for row in reader:
            if len(row) != len(expected):
                raise ValueError(f"{path.name}: row {row} has wrong width")
            rec: dict[str, Any] = {}
            for k, v in zip(expected, row):
                rec[k] = v if k in _TEXT_COLUMNS else int(v) if k in _INT_COLUMNS else float(v)
            out.append(rec)
    return out


def write_frontier(path: Path, points: Sequence[FrontierPoint]) -> Path:
    return _write_csv(path, ((p.lam, p.cost, p.emissions, p.scalarized) for p in points))


def write_breakpoints(path: Path, frontier: PiecewiseFrontier) -> Path:
    return _write_csv(path, ((s.lam_lo, s.lam_hi, s.cost, s.emissions) for s in frontier.segments))


def write_regions(path: Path, regions: Sequence[CriticalRegion]) -> Path:
    return _write_csv(path, ((r.theta_lo, r.theta_hi, r.alpha, r.beta) for r in regions))


def write_trace(path: Path, trace: IterationTrace) -> Path:
    return _write_csv(path, ((e.phase, e.iteration, e.lam, e.cost, e.emissions, e.F)
                             for e in trace.evaluations))


def write_dispatch(path: Path, case: CaseData, hd: HorizonDispatch) -> Path:
    rows = []
    for p in hd.periods:
        rows += [(p.t, "unit", u.id, float(p.unit_output[i])) for i, u in enumerate(case.units)]
        rows += [(p.t, "ac_line", ln.id, float(p.ac_flows[k])) for k, ln in enumerate(case.ac_lines)]
        rows += [(p.t, "dc_line", ln.id, float(p.dc_flows[k])) for k, ln in enumerate(case.dc_lines)]
    return _write_csv(path, rows)


def dispatch_summary(hd: HorizonDispatch) -> dict:
    return {
        "total_cost": hd.total_cost,
        "total_emissions": hd.total_emissions,
        "periods": [{"t": p.t, "cost": p.cost, "emissions": p.emissions} for p in hd.periods],
    }


CARBON_PRICE_NOTE = (
    "physical price = (1-lambda)/lambda * c_norm/e_norm, with c_norm the cost of the "
    "emission-optimal endpoint and e_norm the emissions of the cost-optimal endpoint"
)


def nash_payload(result: NashResult, trace: IterationTrace) -> dict:
    pr = result.problem
    ref = result.refined_point
    return {
        "lambda_star": result.lam_star,
        "F_star": result.F_star,
        "cost": result.cost,
        "emissions": result.emissions,
        "d1": pr.d1 if pr else None,
        "d2": pr.d2 if pr else None,
        "c_norm": pr.c_norm if pr else None,
        "e_norm": pr.e_norm if pr else None,
        "carbon_price_normalized": result.carbon_price_normalized,
        "carbon_price_physical": result.carbon_price_physical,
        "carbon_price_note": CARBON_PRICE_NOTE,
        "converged": result.converged,
        "converged_by": list(trace.converged_by),
        "degenerate": result.degenerate,
        "iterations": result.iterations,
        "iterates": trace.iterates,
        "refined_point": None if ref is None else {
            "cost": ref.cost, "emissions": ref.emissions, "s": ref.s, "F": ref.F,
            "lambda_a": ref.lam_a, "lambda_b": ref.lam_b,
        },
    }
