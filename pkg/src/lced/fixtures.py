"""Small reference cases used by the tests, the docs and ``lced seed-case``.

toyA
    One node, one unit (c=10, e=1.0, 0-100 MW), 50 MW load.  The dispatch is
    unique, so the frontier is a single point.
toyB
    One node, a cheap dirty unit A (c=10, e=1.0) and an expensive clean unit
    B (c=50, e=0.2), both 0-100 MW, 100 MW load.  Two vertices (1000, 100) and
    (5000, 20); after normalization the weighted objective is flat at 0.5.
toyC
    Three-node triangle, equal susceptances, congested lines 0-2 (80 MW),
    1-2 (120 MW), 0-1 (50 MW).  Cheap dirty unit at node 0, expensive clean
    unit at node 1, a 45 MW mid-range unit at the load node 2.  Two periods
    with 150 MW and 120 MW load.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .grid import AcLine, CaseData, Node, Unit, UnitKind, save_case


def toy_a(loads=(50.0,)) -> CaseData:
    return CaseData(
        nodes=(Node(0, "n0"),),
        units=(Unit(0, 0, UnitKind.THERMAL, 10.0, 1.0, 0.0, 100.0),),
        ac_lines=(),
        dc_lines=(),
        load=np.array([list(loads)], dtype=float),
        availability=np.ones((1, len(loads))),
    )


def toy_b() -> CaseData:
    return CaseData(
        nodes=(Node(0, "n0"),),
        units=(
            Unit(0, 0, UnitKind.THERMAL, 10.0, 1.0, 0.0, 100.0),
            Unit(1, 0, UnitKind.GAS, 50.0, 0.2, 0.0, 100.0),
        ),
        ac_lines=(),
        dc_lines=(),
        load=np.array([[100.0]]),
        availability=np.ones((2, 1)),
    )


def toy_c() -> CaseData:
    return CaseData(
        nodes=(Node(0, "n0"), Node(1, "n1"), Node(2, "n2")),
        units=(
            Unit(0, 0, UnitKind.THERMAL, 21.0, 0.95, 0.0, 200.0),
            Unit(1, 1, UnitKind.HYDRO, 63.0, 0.12, 0.0, 200.0),
            Unit(2, 2, UnitKind.GAS, 38.0, 0.48, 0.0, 45.0),
        ),
        ac_lines=(
            AcLine(0, 0, 2, 10.0, 80.0),
            AcLine(1, 1, 2, 10.0, 120.0),
            AcLine(2, 0, 1, 10.0, 50.0),
        ),
        dc_lines=(),
        load=np.array([[0.0, 0.0], [0.0, 0.0], [150.0, 120.0]]),
        availability=np.ones((3, 2)),
    )


FIXTURES = {"toyA": toy_a, "toyB": toy_b, "toyC": toy_c}


def seed_case(name: str, out_dir: str | Path) -> Path:
    """Write fixture ``name`` as a CSV case directory."""
    try:
        factory = FIXTURES[name]
    except KeyError:
        raise ValueError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)}") from None
    return save_case(factory(), out_dir)
