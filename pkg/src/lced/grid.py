"""Grid case schema, CSV case-directory loading and time-varying unit bounds."""

from __future__ import annotations

import csv
import enum
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import CaseError

LOGGER = logging.getLogger(__name__)

DEFAULT_S_BASE = 100.0


class UnitKind(str, enum.Enum):
    THERMAL = "thermal"
    GAS = "gas"
    HYDRO = "hydro"
    NUCLEAR = "nuclear"
    WIND = "wind"
    PV = "pv"
    OTHER = "other"


@dataclass(frozen=True)
class Node:
    id: int
    name: str


@dataclass(frozen=True)
class Unit:
    """A dispatchable generating unit.

    ``cost_coeff`` is in currency/MWh and ``emission_coeff`` in tCO2/MWh; with
    hourly periods both apply directly to the MW output.
    """

    id: int
    node_id: int
    kind: UnitKind
    cost_coeff: float
    emission_coeff: float
    p_min: float
    p_max: float


@dataclass(frozen=True)
class AcLine:
    id: int
    from_node: int
    to_node: int
    susceptance: float  # per unit on s_base
    capacity: float  # MW, both directions


@dataclass(frozen=True)
class DcLine:
    id: int
    from_node: int
    to_node: int
    capacity: float  # MW, from -> to only


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CaseData:
    """Immutable grid description.

    ``load`` has shape ``(n_nodes, horizon)`` in MW and ``availability`` has
    shape ``(n_units, horizon)`` with factors in [0, 1].
    """

    nodes: tuple[Node, ...]
    units: tuple[Unit, ...]
    ac_lines: tuple[AcLine, ...]
    dc_lines: tuple[DcLine, ...]
    load: np.ndarray
    availability: np.ndarray
    s_base: float = DEFAULT_S_BASE
    _unit_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "units", tuple(self.units))
        object.__setattr__(self, "ac_lines", tuple(self.ac_lines))
        object.__setattr__(self, "dc_lines", tuple(self.dc_lines))
        object.__setattr__(self, "load", _frozen(self.load))
        object.__setattr__(self, "availability", _frozen(self.availability))
        object.__setattr__(self, "_unit_index", {u.id: i for i, u in enumerate(self.units)})
        validate_case(self)

    @property
    def horizon(self) -> int:
        return self.load.shape[1]

    def unit_index(self, unit_id: int) -> int:
        try:
            return self._unit_index[unit_id]
        except KeyError:
            raise CaseError(f"unknown unit id {unit_id}") from None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CaseData):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.units == other.units
            and self.ac_lines == other.ac_lines
            and self.dc_lines == other.dc_lines
            and self.s_base == other.s_base
            and np.array_equal(self.load, other.load)
            and np.array_equal(self.availability, other.availability)
        )

    __hash__ = None  # type: ignore[assignment]

    def with_costs_scaled(self, alpha: float) -> CaseData:
        """Copy of the case with every unit cost coefficient multiplied by ``alpha``."""
        units = tuple(
            Unit(u.id, u.node_id, u.kind, u.cost_coeff * alpha, u.emission_coeff, u.p_min, u.p_max)
            for u in self.units
        )
        return CaseData(self.nodes, units, self.ac_lines, self.dc_lines,
                        self.load, self.availability, self.s_base)

    def with_load_scaled(self, factor: float) -> CaseData:
        return CaseData(self.nodes, self.units, self.ac_lines, self.dc_lines,
                        self.load * factor, self.availability, self.s_base)


def validate_case(case: CaseData) -> None:
    n_nodes = len(case.nodes)
    if [n.id for n in case.nodes] != list(range(n_nodes)):
        raise CaseError("node ids must be unique and contiguous from 0")
    if case.load.ndim != 2 or case.load.shape[0] != n_nodes:
        raise CaseError(f"load must have shape (n_nodes={n_nodes}, T)")
    if case.horizon < 1:
        raise CaseError("horizon must contain at least one period")
    if case.availability.shape != (len(case.units), case.horizon):
        raise CaseError("availability must have shape (n_units, T)")
    if np.any(case.availability < 0) or np.any(case.availability > 1):
        raise CaseError("availability factors must lie in [0, 1]")
    if case.s_base <= 0:
        raise CaseError("s_base must be positive")

    def check_node(ref: int, what: str) -> None:
        if not 0 <= ref < n_nodes:
            raise CaseError(f"{what} references nonexistent node {ref}")

    for kind, items in (("unit", case.units), ("ac line", case.ac_lines), ("dc line", case.dc_lines)):
        ids = [it.id for it in items]
        if len(set(ids)) != len(ids):
            raise CaseError(f"duplicate {kind} id")
    for u in case.units:
        check_node(u.node_id, f"unit {u.id}")
        if not 0 <= u.p_min <= u.p_max:
            raise CaseError(f"unit {u.id}: need 0 <= p_min <= p_max")
        if u.cost_coeff < 0 or u.emission_coeff < 0:
            raise CaseError(f"unit {u.id}: coefficients must be non-negative")
    for ln in case.ac_lines:
        check_node(ln.from_node, f"ac line {ln.id}")
        check_node(ln.to_node, f"ac line {ln.id}")
        if ln.from_node == ln.to_node:
            raise CaseError(f"ac line {ln.id}: from and to nodes coincide")
        if ln.capacity <= 0 or ln.susceptance <= 0:
            raise CaseError(f"ac line {ln.id}: capacity and susceptance must be positive")
    for ln in case.dc_lines:
        check_node(ln.from_node, f"dc line {ln.id}")
        check_node(ln.to_node, f"dc line {ln.id}")
        if ln.from_node == ln.to_node:
            raise CaseError(f"dc line {ln.id}: from and to nodes coincide")
        if ln.capacity <= 0:
            raise CaseError(f"dc line {ln.id}: capacity must be positive")

    peak = float(case.load.sum(axis=0).max())
    installed = sum(u.p_max for u in case.units)
    if installed < peak:
        LOGGER.warning("installed capacity %.6g MW is below peak load %.6g MW", installed, peak)


def effective_unit_bounds(case: CaseData, unit_id: int, t: int) -> tuple[float, float]:
    """Output bounds of a unit in period ``t``.

    Availability scales only the upper bound; when that pushes it below
    ``p_min`` the lower bound is clamped down to match.
    """
    if not 0 <= t < case.horizon:
        raise IndexError(f"period {t} outside horizon {case.horizon}")
    i = case.unit_index(unit_id)
    u = case.units[i]
    hi = float(case.availability[i, t]) * u.p_max
    lo = min(u.p_min, hi)
    return lo, hi


def ac_islands(case: CaseData) -> list[np.ndarray]:
    """Node index arrays of the AC-connected islands, ordered by lowest node."""
    n = len(case.nodes)
    rows = [ln.from_node for ln in case.ac_lines]
    cols = [ln.to_node for ln in case.ac_lines]
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    islands: dict[int, list[int]] = {}
    for node, lab in enumerate(labels):
        islands.setdefault(int(lab), []).append(node)
    return sorted((np.array(v) for v in islands.values()), key=lambda a: int(a[0]))


def reference_nodes(case: CaseData) -> list[int]:
    """Lowest-indexed node of every AC island; its angle is fixed to zero."""
    return [int(isl[0]) for isl in ac_islands(case)]


# --------------------------------------------------------------------------
# CSV case directories
# --------------------------------------------------------------------------

CASE_FILES = {
    "nodes.csv": ("id", "name"),
    "units.csv": ("id", "node_id", "kind", "cost", "emission", "pmin_mw", "pmax_mw"),
    "ac_lines.csv": ("id", "from", "to", "susceptance_pu", "capacity_mw"),
    "dc_lines.csv": ("id", "from", "to", "capacity_mw"),
    "load.csv": ("node_id", "t", "load_mw"),
    "availability.csv": ("unit_id", "t", "factor"),
}
OPTIONAL_FILES = {"availability.csv"}


def _rows(path: Path) -> Iterator[tuple[int, dict[str, str]]]:
    name = path.name
    expected = CASE_FILES[name]
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != expected:
            raise CaseError(f"bad header, expected {','.join(expected)}", name, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(expected):
                raise CaseError(f"expected {len(expected)} fields, got {len(row)}", name, lineno)
            yield lineno, dict(zip(expected, (c.strip() for c in row)))


def _num(row: dict[str, str], key: str, name: str, lineno: int, kind=float):
    try:
        return kind(row[key])
    except ValueError:
        raise CaseError(f"malformed value {row[key]!r} in column {key}", name, lineno) from None


def load_case(case_dir: str | Path, s_base: float = DEFAULT_S_BASE) -> CaseData:
    """Read and validate a case directory of CSV files."""
    case_dir = Path(case_dir)
    for name in CASE_FILES:
        if name not in OPTIONAL_FILES and not (case_dir / name).is_file():
            raise CaseError(f"missing file {name}")

    nodes: list[Node] = []
    seen: set[int] = set()
    for ln, r in _rows(case_dir / "nodes.csv"):
        nid = _num(r, "id", "nodes.csv", ln, int)
        if nid in seen:
            raise CaseError(f"duplicate id {nid}", "nodes.csv", ln)
        seen.add(nid)
        nodes.append(Node(nid, r["name"]))
    nodes.sort(key=lambda n: n.id)
    if [n.id for n in nodes] != list(range(len(nodes))):
        raise CaseError("node ids must be contiguous from 0", "nodes.csv")
    n_nodes = len(nodes)

    def node_ref(value: int, name: str, lineno: int) -> int:
        if not 0 <= value < n_nodes:
            raise CaseError(f"dangling node reference {value}", name, lineno)
        return value

    units: list[Unit] = []
    seen = set()
    for ln, r in _rows(case_dir / "units.csv"):
        f = "units.csv"
        uid = _num(r, "id", f, ln, int)
        if uid in seen:
            raise CaseError(f"duplicate id {uid}", f, ln)
        seen.add(uid)
        try:
            kind = UnitKind(r["kind"].lower())
        except ValueError:
            raise CaseError(f"unknown unit kind {r['kind']!r}", f, ln) from None
        unit = Unit(uid, node_ref(_num(r, "node_id", f, ln, int), f, ln), kind,
                    _num(r, "cost", f, ln), _num(r, "emission", f, ln),
                    _num(r, "pmin_mw", f, ln), _num(r, "pmax_mw", f, ln))
        if not 0 <= unit.p_min <= unit.p_max or unit.cost_coeff < 0 or unit.emission_coeff < 0:
            raise CaseError("invalid unit data (need 0<=pmin<=pmax, non-negative coefficients)", f, ln)
        units.append(unit)

    ac_lines: list[AcLine] = []
    seen = set()
    for ln, r in _rows(case_dir / "ac_lines.csv"):
        f = "ac_lines.csv"
        lid = _num(r, "id", f, ln, int)
        if lid in seen:
            raise CaseError(f"duplicate id {lid}", f, ln)
        seen.add(lid)
        line = AcLine(lid, node_ref(_num(r, "from", f, ln, int), f, ln),
                      node_ref(_num(r, "to", f, ln, int), f, ln),
                      _num(r, "susceptance_pu", f, ln), _num(r, "capacity_mw", f, ln))
        if line.from_node == line.to_node or line.capacity <= 0 or line.susceptance <= 0:
            raise CaseError("invalid ac line (self loop or non-positive capacity/susceptance)", f, ln)
        ac_lines.append(line)

    dc_lines: list[DcLine] = []
    seen = set()
    for ln, r in _rows(case_dir / "dc_lines.csv"):
        f = "dc_lines.csv"
        lid = _num(r, "id", f, ln, int)
        if lid in seen:
            raise CaseError(f"duplicate id {lid}", f, ln)
        seen.add(lid)
        line = DcLine(lid, node_ref(_num(r, "from", f, ln, int), f, ln),
                      node_ref(_num(r, "to", f, ln, int), f, ln), _num(r, "capacity_mw", f, ln))
        if line.from_node == line.to_node or line.capacity <= 0:
            raise CaseError("invalid dc line (self loop or non-positive capacity)", f, ln)
        dc_lines.append(line)

    load_entries: dict[tuple[int, int], float] = {}
    for ln, r in _rows(case_dir / "load.csv"):
        f = "load.csv"
        node = node_ref(_num(r, "node_id", f, ln, int), f, ln)
        t = _num(r, "t", f, ln, int)
        if t < 0:
            raise CaseError(f"negative period {t}", f, ln)
        if (node, t) in load_entries:
            raise CaseError(f"duplicate load entry for node {node}, t={t}", f, ln)
        load_entries[(node, t)] = _num(r, "load_mw", f, ln)
    if not load_entries:
        raise CaseError("no load rows", "load.csv")
    horizon = max(t for _, t in load_entries) + 1
    load = np.zeros((n_nodes, horizon))
    for (node, t), v in load_entries.items():
        load[node, t] = v

    units.sort(key=lambda u: u.id)
    unit_pos = {u.id: i for i, u in enumerate(units)}
    availability = np.ones((len(units), horizon))
    avail_path = case_dir / "availability.csv"
    if avail_path.is_file():
        seen_at: set[tuple[int, int]] = set()
        for ln, r in _rows(avail_path):
            f = "availability.csv"
            uid = _num(r, "unit_id", f, ln, int)
            if uid not in unit_pos:
                raise CaseError(f"dangling unit reference {uid}", f, ln)
            t = _num(r, "t", f, ln, int)
            if not 0 <= t < horizon:
                raise CaseError(f"period {t} outside horizon {horizon}", f, ln)
            if (uid, t) in seen_at:
                raise CaseError(f"duplicate availability entry for unit {uid}, t={t}", f, ln)
            seen_at.add((uid, t))
            factor = _num(r, "factor", f, ln)
            if not 0 <= factor <= 1:
                raise CaseError(f"availability factor {factor} outside [0, 1]", f, ln)
            availability[unit_pos[uid], t] = factor

    return CaseData(tuple(nodes), tuple(units), tuple(sorted(ac_lines, key=lambda x: x.id)),
                    tuple(sorted(dc_lines, key=lambda x: x.id)), load, availability, s_base)


def _fmt(x: float) -> str:
    return repr(float(x))


def save_case(case: CaseData, case_dir: str | Path) -> Path:
    """Write ``case`` as a CSV case directory readable by :func:`load_case`."""
    case_dir = Path(case_dir)
    case_dir.mkdir(parents=True, exist_ok=True)

    def write(name: str, rows: Sequence[Sequence[object]]) -> None:
        with (case_dir / name).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CASE_FILES[name])
            w.writerows(rows)

    write("nodes.csv", [(n.id, n.name) for n in case.nodes])
    write("units.csv", [(u.id, u.node_id, u.kind.value, _fmt(u.cost_coeff), _fmt(u.emission_coeff),
                         _fmt(u.p_min), _fmt(u.p_max)) for u in case.units])
    write("ac_lines.csv", [(ln.id, ln.from_node, ln.to_node, _fmt(ln.susceptance), _fmt(ln.capacity))
                           for ln in case.ac_lines])
    write("dc_lines.csv", [(ln.id, ln.from_node, ln.to_node, _fmt(ln.capacity)) for ln in case.dc_lines])
    # every (node, t) is written so the horizon survives all-zero trailing periods
    write("load.csv", [(r, t, _fmt(case.load[r, t]))
                       for t in range(case.horizon) for r in range(len(case.nodes))])
    write("availability.csv", [(u.id, t, _fmt(case.availability[i, t]))
                               for i, u in enumerate(case.units) for t in range(case.horizon)
                               if case.availability[i, t] != 1.0])
    return case_dir
