"""Command-line front end.

    lced solve     --case DIR --out DIR [--lambda L] [--raw]
    lced frontier  --case DIR --out DIR [--grid N] [--exact] [--raw]
    lced nash      --case DIR --out DIR [--eps1-rel E] [--eps2 E] [--max-iters N]
                   [--convergence-mode both|either] [--no-refine]
    lced regions   --case DIR --out DIR [--period T] [--raw]
    lced seed-case {toyA,toyB,toyC} --out DIR

``--case`` also accepts the name of a built-in fixture.  Exit codes: 0 ok,
1 data error, 2 infeasible, 3 numerical failure, 4 non-convergence; errors are
reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import ExitStack
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .dispatch import RAW_NORMS, solve_horizon
from .errors import CaseError, LcedError, NonConvergenceError
from .fixtures import FIXTURES, seed_case
from .frontier import FrontierPoint, exact_frontier, period_regions, scalarize, scan_frontier
from .grid import CaseData, load_case
from .lp import SETTINGS
from .nash import NashConfig, disagreement_points, dynamic_weight_search

COMMANDS = ("solve", "frontier", "nash", "regions")


@dataclass
class RunConfig:
    case_dir: str
    out_dir: str
    command: str
    lam: float = 0.5
    grid: int = 11
    exact: bool = False
    period: int = 0
    raw: bool = False
    nash: NashConfig = field(default_factory=NashConfig)
    workers: int | None = None
    tol_feas: float | None = None
    tol_opt: float | None = None

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise CaseError(f"unknown command {self.command!r}")
        if not 0.0 <= self.lam <= 1.0:
            raise CaseError("--lambda must lie in [0, 1]")
        if self.grid < 1:
            raise CaseError("--grid must be at least 1")
        if self.workers is not None and self.workers < 1:
            raise CaseError("--workers must be at least 1")


def resolve_case(name: str) -> CaseData:
    path = Path(name)
    if not path.exists() and name in FIXTURES:
        return FIXTURES[name]()
    if not path.is_dir():
        raise CaseError(f"case directory {name!r} not found")
    return load_case(path)


def run(config: RunConfig) -> int:
    """Execute one command and write its files into ``config.out_dir``."""
    if config.tol_feas is not None:
        SETTINGS.tol_feas = config.tol_feas
    if config.tol_opt is not None:
        SETTINGS.tol_opt = config.tol_opt
    case = resolve_case(config.case_dir)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n_workers = config.workers or os.cpu_count() or 1

    with ExitStack() as stack:
        workers: object = 1
        if n_workers > 1 and case.horizon > 1:
            workers = stack.enter_context(ProcessPoolExecutor(max_workers=n_workers))

        def norms():
            return RAW_NORMS if config.raw else disagreement_points(case).norms

        if config.command == "solve":
            nrm = norms()
            hd = solve_horizon(case, config.lam, nrm, workers=workers)
            io.write_dispatch(out / "dispatch.csv", case, hd)
            payload = {"lambda": config.lam, "norms": list(nrm), "objective": hd.objective}
            payload.update(io.dispatch_summary(hd))
            io.write_json(out / "result.json", payload)
        elif config.command == "frontier":
            nrm = norms()
            lams = np.linspace(0.0, 1.0, config.grid) if config.grid > 1 else [config.lam]
            pts = scan_frontier(case, [float(v) for v in lams], nrm, workers=workers)
            # keep one row per requested grid value even where values coincide
            by_lam = {p.lam: p for p in pts}
            io.write_frontier(out / "frontier.csv", [by_lam[float(v)] for v in lams])
            if config.exact:
                io.write_breakpoints(out / "breakpoints.csv", exact_frontier(case, nrm))
        elif config.command == "regions":
            if not 0 <= config.period < case.horizon:
                raise CaseError(f"--period {config.period} outside horizon {case.horizon}")
            io.write_regions(out / "regions.csv", period_regions(case, config.period, norms()))
        elif config.command == "nash":
            result, trace = dynamic_weight_search(case, config.nash, workers=workers)
            io.write_json(out / "result.json", io.nash_payload(result, trace))
            io.write_trace(out / "trace.csv", trace)
            nrm = result.problem.norms
            pts = sorted(trace.evaluations, key=lambda e: (e.lam, e.iteration))
            io.write_frontier(out / "frontier.csv", [
                FrontierPoint(e.lam, e.cost, e.emissions, scalarize(e.lam, e.cost, e.emissions, nrm))
                for e in pts])
            if not result.converged and not result.degenerate:
                raise NonConvergenceError(
                    f"no convergence after {result.iterations} iterations; best lambda {result.lam_star}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lced", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--case", required=True, help="case directory or fixture name (toyA, toyB, toyC)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--workers", type=int, default=None, help="worker processes (default: logical cores)")
        p.add_argument("--tol-feas", type=float, default=None)
        p.add_argument("--tol-opt", type=float, default=None)

    p = sub.add_parser("solve", help="dispatch at one weight")
    common(p)
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--raw", action="store_true", help="unnormalized objectives")

    p = sub.add_parser("frontier", help="weighted-sum frontier scan")
    common(p)
    p.add_argument("--grid", type=int, default=11, help="number of evenly spaced weights in [0, 1]")
    p.add_argument("--lambda", dest="lam", type=float, default=0.5, help="weight used when --grid 1")
    p.add_argument("--exact", action="store_true", help="also write the exact breakpoints")
    p.add_argument("--raw", action="store_true")

    p = sub.add_parser("nash", help="Nash bargaining weight search")
    common(p)
    p.add_argument("--eps1-rel", type=float, default=1e-4)
    p.add_argument("--eps2", type=float, default=0.02)
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("--convergence-mode", choices=("both", "either"), default="both")
    p.add_argument("--no-refine", action="store_true")

    p = sub.add_parser("regions", help="critical regions of one period")
    common(p)
    p.add_argument("--period", type=int, default=0)
    p.add_argument("--raw", action="store_true")

    p = sub.add_parser("seed-case", help="write a built-in fixture as a case directory")
    p.add_argument("name", choices=sorted(FIXTURES))
    p.add_argument("--out", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "seed-case":
            seed_case(args.name, args.out)
            return 0
        nash_cfg = NashConfig()
        if args.command == "nash":
            nash_cfg = NashConfig(eps1_rel=args.eps1_rel, eps2=args.eps2, max_iters=args.max_iters,
                                  convergence_mode=args.convergence_mode,
                                  segment_refinement=not args.no_refine)
        cfg = RunConfig(
            case_dir=args.case, out_dir=args.out, command=args.command,
            lam=getattr(args, "lam", 0.5), grid=getattr(args, "grid", 11),
            exact=getattr(args, "exact", False), period=getattr(args, "period", 0),
            raw=getattr(args, "raw", False), nash=nash_cfg, workers=args.workers,
            tol_feas=args.tol_feas, tol_opt=args.tol_opt,
        )
        return run(cfg)
    except LcedError as exc:
        sys.stderr.write(json.dumps(exc.to_dict()) + "\n")
        return exc.exit_code
    except ValueError as exc:
        sys.stderr.write(json.dumps({"error": "CaseError", "message": str(exc)}) + "\n")
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
