"""Case, profile, mapping and report serialization.

Two case formats are supported: a MATPOWER-style subset (read only) and a
native JSON document that mirrors the Grid type exactly (read and write).
Impedances in MATPOWER files are per-unit and are converted to ohms on ingest
using the source-side bus base voltage and the system MVA base; the native
format stores ohms and siemens directly, so a write/parse round trip is exact.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

from .model import (
    LINE,
    TRANSFORMER,
    Branch,
    Bus,
    Generator,
    Grid,
    Load,
    validate,
)

logger = logging.getLogger(__name__)


class CaseFormatError(Exception):
    """Malformed or semantically invalid case content."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class ProfileFormatError(Exception):
    pass


class AnnotationFormatError(Exception):
    pass


class MappingFormatError(Exception):
    pass


@dataclass(frozen=True)
class LoadProfile:
    """Ordered per-hour load scale factors."""

    name: str
    scale_factors: tuple[float, ...]

    def __post_init__(self):
        if not isinstance(self.scale_factors, tuple):
            object.__setattr__(self, "scale_factors", tuple(self.scale_factors))

    def __len__(self) -> int:
        return len(self.scale_factors)


@dataclass(frozen=True)
class BusMapping:
    """Total map from original bus ids to retained bus ids.

    Retained buses map to themselves; every target must be a retained bus.
    """

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(sorted((int(a), int(b)) for a, b in self.pairs)))

    @classmethod
    def identity(cls, bus_ids: Iterable[int]) -> "BusMapping":
        return cls(tuple((b, b) for b in bus_ids))

    @cached_property
    def as_dict(self) -> dict[int, int]:
        return dict(self.pairs)

    @cached_property
    def original_ids(self) -> frozenset[int]:
        return frozenset(self.as_dict)

    @cached_property
    def retained_ids(self) -> frozenset[int]:
        return frozenset(self.as_dict.values())

    def target(self, bus_id: int) -> int:
        return self.as_dict[bus_id]

    def compose(self, later: "BusMapping") -> "BusMapping":
        """Mapping equivalent to applying self, then `later`.

        Every target of self must be an original of `later`.
        """
        missing = self.retained_ids - later.original_ids
        if missing:
            raise ValueError(f"composition gap: buses {sorted(missing)} not mapped by the later stage")
        return BusMapping(tuple((o, later.target(t)) for o, t in self.pairs))

    def check_consistent(self) -> None:
        """Raise unless retained buses map to themselves."""
        for t in self.retained_ids:
            if self.as_dict.get(t) != t:
                raise ValueError(f"retained bus {t} does not map to itself")


# -- case files --------------------------------------------------------------

_MATPOWER_STMT = re.compile(r"mpc\.(\w+)\s*=\s*(.*)$")

# column counts below are minimums; extra standard columns are tolerated
_BUS_COLS = 10
_GEN_COLS = 10
_BRANCH_COLS = 11


def parse_case(text: str) -> Grid:
    """Parse native JSON or MATPOWER-style case content into a valid Grid."""
    stripped = text.lstrip()
    if not stripped:
        raise CaseFormatError("empty case file")
    if stripped.startswith("{"):
        grid = _parse_native(text)
    elif "mpc." in text:
        grid = _parse_matpower(text)
    else:
        raise CaseFormatError("unrecognized case format: expected JSON document or mpc.* statements")
    report = validate(grid)
    if not report.is_valid:
        msgs = "; ".join(v.message for v in report.violations)
        raise CaseFormatError(f"case fails validation: {msgs}")
    return grid


def write_case(grid: Grid) -> str:
    """Serialize a grid to the native JSON format (exact round trip)."""
    doc = {
        "format": "grid-native",
        "version": 1,
        "name": grid.name,
        "buses": [
            {
                "id": b.id,
                "base_kv": b.base_kv,
                "shunt_conductance": b.shunt_conductance,
                "shunt_susceptance": b.shunt_susceptance,
                "is_reference": b.is_reference,
            }
            for b in grid.buses
        ],
        "branches": [
            {
                "id": b.id,
                "src_bus": b.src_bus,
                "dst_bus": b.dst_bus,
                "series_resistance": b.series_resistance,
                "series_reactance": b.series_reactance,
                "total_charging_susceptance": b.total_charging_susceptance,
                "rating": b.rating,
                "kind": b.kind,
                "length_km": b.length_km,
            }
            for b in grid.branches
        ],
        "generators": [
            {
                "id": g.id,
                "bus": g.bus,
                "p_min": g.p_min,
                "p_max": g.p_max,
                "cost_linear": g.cost_linear,
                "cost_constant": g.cost_constant,
                "is_conventional": g.is_conventional,
            }
            for g in grid.generators
        ],
        "loads": [{"id": l.id, "bus": l.bus, "p_demand": l.p_demand} for l in grid.loads],
    }
    return json.dumps(doc, indent=1)


def _parse_native(text: str) -> Grid:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise CaseFormatError(f"invalid JSON: {e.msg}", line_no=e.lineno)
    if not isinstance(doc, dict):
        raise CaseFormatError("top-level JSON value must be an object")

    def entity(table: str, row: Mapping, keys: tuple[str, ...]):
        missing = [k for k in keys if k not in row]
        if missing:
            ident = row.get("id", "?")
            raise CaseFormatError(f"{table} entry {ident} missing fields {missing}")

    buses = []
    for row in doc.get("buses", []):
        entity("bus", row, ("id", "base_kv"))
        buses.append(
            Bus(
                id=int(row["id"]),
                base_kv=float(row["base_kv"]),
                shunt_conductance=float(row.get("shunt_conductance", 0.0)),
                shunt_susceptance=float(row.get("shunt_susceptance", 0.0)),
                is_reference=bool(row.get("is_reference", False)),
            )
        )
    branches = []
    for row in doc.get("branches", []):
        entity("branch", row, ("id", "src_bus", "dst_bus", "series_resistance", "series_reactance"))
        rating = row.get("rating")
        length = row.get("length_km")
        branches.append(
            Branch(
                id=int(row["id"]),
                src_bus=int(row["src_bus"]),
                dst_bus=int(row["dst_bus"]),
                series_resistance=float(row["series_resistance"]),
                series_reactance=float(row["series_reactance"]),
                total_charging_susceptance=float(row.get("total_charging_susceptance", 0.0)),
                rating=None if rating is None else float(rating),
                kind=str(row.get("kind", LINE)),
                length_km=None if length is None else float(length),
            )
        )
    generators = []
    for row in doc.get("generators", []):
        entity("generator", row, ("id", "bus", "p_min", "p_max"))
        generators.append(
            Generator(
                id=int(row["id"]),
                bus=int(row["bus"]),
                p_min=float(row["p_min"]),
                p_max=float(row["p_max"]),
                cost_linear=float(row.get("cost_linear", 0.0)),
                cost_constant=float(row.get("cost_constant", 0.0)),
                is_conventional=bool(row.get("is_conventional", True)),
            )
        )
    loads = []
    for row in doc.get("loads", []):
        entity("load", row, ("id", "bus", "p_demand"))
        loads.append(Load(id=int(row["id"]), bus=int(row["bus"]), p_demand=float(row["p_demand"])))
    return Grid(
        buses=tuple(buses),
        branches=tuple(branches),
        generators=tuple(generators),
        loads=tuple(loads),
        name=str(doc.get("name", "")),
    )


def _matpower_statements(text: str):
    """Yield (name, scalar_text | row list) pairs; rows carry line numbers."""
    lines = text.splitlines()
    scalars: dict[str, tuple[str, int]] = {}
    matrices: dict[str, list[tuple[int, str]]] = {}
    i = 0
    n = len(lines)
    while i < n:
        code = lines[i].split("%", 1)[0].strip()
        if not code or code.startswith("function"):
            i += 1
            continue
        m = _MATPOWER_STMT.match(code)
        if m is None:
            raise CaseFormatError(f"unrecognized statement: {code!r}", line_no=i + 1)
        name, rest = m.group(1), m.group(2).strip()
        if rest.startswith("["):
            rows: list[tuple[int, str]] = []
            body = rest[1:]
            start_line = i + 1
            while True:
                line_no = i + 1
                closed = "]" in body
                if closed:
                    body = body.split("]", 1)[0]
                body = body.strip()
                for chunk in body.split(";"):
                    chunk = chunk.strip()
                    if chunk:
                        rows.append((line_no, chunk))
                if closed:
                    break
                i += 1
                if i >= n:
                    raise CaseFormatError(f"unterminated matrix mpc.{name}", line_no=start_line)
                body = lines[i].split("%", 1)[0]
            matrices[name] = rows
        elif rest.startswith("{"):
            # cell arrays (e.g. bus names) carry no electrical data
            logger.warning("ignoring cell-array field mpc.%s", name)
            start_line = i + 1
            while "}" not in lines[i].split("%", 1)[0]:
                i += 1
                if i >= n:
                    raise CaseFormatError(f"unterminated cell array mpc.{name}", line_no=start_line)
        else:
            scalars[name] = (rest.rstrip(";").strip(), i + 1)
        i += 1
    return scalars, matrices


def _row_values(table: str, row: str, line_no: int, min_cols: int) -> list[float]:
    parts = row.replace(",", " ").split()
    if len(parts) < min_cols:
        raise CaseFormatError(f"{table} row has {len(parts)} columns, expected at least {min_cols}", line_no)
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise CaseFormatError(f"non-numeric value in {table} row: {row!r}", line_no)


def _parse_matpower(text: str) -> Grid:
    scalars, matrices = _matpower_statements(text)

    known = {"version", "baseMVA", "bus", "gen", "branch", "gencost"}
    for name in set(scalars) | set(matrices):
        if name not in known:
            logger.warning("ignoring out-of-subset field mpc.%s", name)

    if "baseMVA" not in scalars:
        raise CaseFormatError("missing mpc.baseMVA")
    base_mva_text, base_mva_line = scalars["baseMVA"]
    try:
        base_mva = float(base_mva_text)
    except ValueError:
        raise CaseFormatError(f"invalid baseMVA value {base_mva_text!r}", base_mva_line)
    if base_mva <= 0:
        raise CaseFormatError("baseMVA must be positive", base_mva_line)
    if "bus" not in matrices:
        raise CaseFormatError("missing mpc.bus table")
    if "branch" not in matrices:
        raise CaseFormatError("missing mpc.branch table")

    buses: list[Bus] = []
    loads: list[Load] = []
    base_kv_by_bus: dict[int, float] = {}
    for line_no, row in matrices["bus"]:
        v = _row_values("bus", row, line_no, _BUS_COLS)
        bus_id = int(v[0])
        bus_type = int(v[1])
        pd, gs, bs, base_kv = v[2], v[4], v[5], v[9]
        if base_kv <= 0:
            raise CaseFormatError(f"bus {bus_id} has nonpositive baseKV", line_no)
        if bus_type == 4:
            logger.warning("bus %d marked isolated (type 4); kept as a plain bus", bus_id)
        # Gs/Bs are MW/MVAr at 1.0 pu voltage; divide by kV^2 for siemens
        buses.append(
            Bus(
                id=bus_id,
                base_kv=base_kv,
                shunt_conductance=gs / base_kv**2,
                shunt_susceptance=bs / base_kv**2,
                is_reference=bus_type == 3,
            )
        )
        base_kv_by_bus[bus_id] = base_kv
        if pd != 0.0:
            if pd < 0:
                logger.warning("bus %d has negative demand %.6g MW; kept as a fixed injection", bus_id, pd)
            loads.append(Load(id=len(loads) + 1, bus=bus_id, p_demand=pd))

    branches: list[Branch] = []
    for idx, (line_no, row) in enumerate(matrices["branch"], start=1):
        v = _row_values("branch", row, line_no, _BRANCH_COLS)
        fbus, tbus = int(v[0]), int(v[1])
        r_pu, x_pu, b_pu, rate_a, tap, status = v[2], v[3], v[4], v[5], v[8], int(v[10])
        if status == 0:
            logger.warning("skipping out-of-service branch %d-%d (row %d)", fbus, tbus, idx)
            continue
        if fbus not in base_kv_by_bus:
            raise CaseFormatError(f"branch row references unknown bus {fbus}", line_no)
        if tbus not in base_kv_by_bus:
            raise CaseFormatError(f"branch row references unknown bus {tbus}", line_no)
        kv = base_kv_by_bus[fbus]
        z_scale = kv**2 / base_mva  # per-unit impedance to ohms
        is_xfmr = tap != 0.0 or base_kv_by_bus[fbus] != base_kv_by_bus[tbus]
        branches.append(
            Branch(
                id=idx,
                src_bus=fbus,
                dst_bus=tbus,
                series_resistance=r_pu * z_scale,
                series_reactance=x_pu * z_scale,
                total_charging_susceptance=b_pu * base_mva / kv**2,
                rating=rate_a if rate_a > 0 else None,
                kind=TRANSFORMER if is_xfmr else LINE,
            )
        )

    generators: list[Generator] = []
    gen_rows = matrices.get("gen", [])
    cost_rows = matrices.get("gencost", [])
    if cost_rows and len(cost_rows) == 2 * len(gen_rows):
        logger.warning("gencost has %d rows for %d generators; ignoring the reactive half", len(cost_rows), len(gen_rows))
        cost_rows = cost_rows[: len(gen_rows)]
    elif cost_rows and len(cost_rows) != len(gen_rows):
        raise CaseFormatError(f"gencost has {len(cost_rows)} rows for {len(gen_rows)} generators")
    if gen_rows and not cost_rows:
        logger.warning("no gencost table; all generator costs set to zero")

    for idx, (line_no, row) in enumerate(gen_rows, start=1):
        v = _row_values("gen", row, line_no, _GEN_COLS)
        bus_id, status, p_max, p_min = int(v[0]), v[7], v[8], v[9]
        if status <= 0:
            logger.warning("skipping out-of-service generator at bus %d (row %d)", bus_id, idx)
            continue
        if bus_id not in base_kv_by_bus:
            raise CaseFormatError(f"generator row references unknown bus {bus_id}", line_no)
        if p_min > p_max:
            raise CaseFormatError(f"generator {idx} has Pmin {p_min} > Pmax {p_max}", line_no)
        cost_linear, cost_constant = 0.0, 0.0
        if cost_rows:
            cost_linear, cost_constant = _gen_cost(cost_rows[idx - 1], idx)
        generators.append(
            Generator(
                id=idx,
                bus=bus_id,
                p_min=p_min,
                p_max=p_max,
                cost_linear=cost_linear,
                cost_constant=cost_constant,
            )
        )

    return Grid(
        buses=tuple(buses),
        branches=tuple(branches),
        generators=tuple(generators),
        loads=tuple(loads),
        name="",
    )


def _gen_cost(cost_row: tuple[int, str], gen_id: int) -> tuple[float, float]:
    """Reduce one gencost row to (linear, constant) coefficients."""
    line_no, row = cost_row
    v = _row_values("gencost", row, line_no, 4)
    model, ncost = int(v[0]), int(v[3])
    coeffs = v[4:]
    if len(coeffs) < (2 * ncost if model == 1 else ncost):
        raise CaseFormatError(f"gencost row for generator {gen_id} is truncated", line_no)
    if model == 2:
        # polynomial, highest order first
        if ncost == 0:
            return 0.0, 0.0
        constant = coeffs[ncost - 1] if ncost >= 1 else 0.0
        linear = coeffs[ncost - 2] if ncost >= 2 else 0.0
        higher = coeffs[: max(ncost - 2, 0)]
        if any(c != 0.0 for c in higher):
            logger.warning("generator %d: ignoring order>=2 cost terms %s", gen_id, higher)
        return linear, constant
    if model == 1:
        if ncost != 2:
            raise CaseFormatError(
                f"piecewise cost with {ncost} points for generator {gen_id}; only 2-point supported", line_no
            )
        x1, y1, x2, y2 = coeffs[0], coeffs[1], coeffs[2], coeffs[3]
        if x2 == x1:
            raise CaseFormatError(f"degenerate piecewise cost for generator {gen_id}", line_no)
        slope = (y2 - y1) / (x2 - x1)
        return slope, y1 - slope * x1
    raise CaseFormatError(f"unknown cost model {model} for generator {gen_id}", line_no)


# -- load profiles -----------------------------------------------------------

def parse_profile(text: str, name: str = "") -> LoadProfile:
    """Parse scale factors, one per line or comma-separated."""
    factors: list[float] = []
    for row_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for field in line.split(","):
            field = field.strip()
            if not field:
                continue
            try:
                f = float(field)
            except ValueError:
                raise ProfileFormatError(f"row {row_no}: non-numeric factor {field!r}")
            if not (0.0 < f <= 1.5):
                raise ProfileFormatError(f"row {row_no}: factor {f} outside (0, 1.5]")
            factors.append(f)
    if not factors:
        raise ProfileFormatError("profile contains no factors")
    return LoadProfile(name=name, scale_factors=tuple(factors))


# -- sidecar annotations -----------------------------------------------------

@dataclass(frozen=True)
class Annotations:
    branch_length_km: tuple[tuple[int, float], ...] = ()
    generator_conventional: tuple[tuple[int, bool], ...] = ()


_TRUE = {"true", "1", "yes"}
_FALSE = {"false", "0", "no"}


def parse_annotations(text: str) -> Annotations:
    """Parse one sidecar CSV, either branch lengths or generator classes."""
    rows = [r.strip() for r in text.splitlines() if r.strip()]
    if not rows:
        raise AnnotationFormatError("empty annotation file")
    header = [h.strip().lower() for h in rows[0].split(",")]
    if header == ["branch_id", "length_km"]:
        lengths = []
        for row_no, row in enumerate(rows[1:], start=2):
            parts = [p.strip() for p in row.split(",")]
            if len(parts) != 2:
                raise AnnotationFormatError(f"row {row_no}: expected 2 fields")
            try:
                lengths.append((int(parts[0]), float(parts[1])))
            except ValueError:
                raise AnnotationFormatError(f"row {row_no}: malformed values {row!r}")
            if lengths[-1][1] < 0:
                raise AnnotationFormatError(f"row {row_no}: negative length")
        return Annotations(branch_length_km=tuple(lengths))
    if header == ["generator_id", "is_conventional"]:
        flags = []
        for row_no, row in enumerate(rows[1:], start=2):
            parts = [p.strip() for p in row.split(",")]
            if len(parts) != 2:
                raise AnnotationFormatError(f"row {row_no}: expected 2 fields")
            try:
                gid = int(parts[0])
            except ValueError:
                raise AnnotationFormatError(f"row {row_no}: malformed generator id {parts[0]!r}")
            flag = parts[1].lower()
            if flag in _TRUE:
                flags.append((gid, True))
            elif flag in _FALSE:
                flags.append((gid, False))
            else:
                raise AnnotationFormatError(f"row {row_no}: malformed boolean {parts[1]!r}")
        return Annotations(generator_conventional=tuple(flags))
    raise AnnotationFormatError(
        "unknown annotation header; expected branch_id,length_km or generator_id,is_conventional"
    )


def apply_annotations(grid: Grid, annotations: Annotations) -> Grid:
    """Return a grid with annotated branch lengths and generator classes."""
    from dataclasses import replace

    lengths = dict(annotations.branch_length_km)
    flags = dict(annotations.generator_conventional)
    unknown_branches = set(lengths) - {b.id for b in grid.branches}
    if unknown_branches:
        raise AnnotationFormatError(f"annotation references unknown branch ids {sorted(unknown_branches)}")
    unknown_gens = set(flags) - {g.id for g in grid.generators}
    if unknown_gens:
        raise AnnotationFormatError(f"annotation references unknown generator ids {sorted(unknown_gens)}")
    branches = tuple(
        replace(b, length_km=lengths[b.id]) if b.id in lengths else b for b in grid.branches
    )
    generators = tuple(
        replace(g, is_conventional=flags[g.id]) if g.id in flags else g for g in grid.generators
    )
    return replace(grid, branches=branches, generators=generators)


# -- mappings, feature sets, tables, reports ---------------------------------

def write_mapping(mapping: BusMapping) -> str:
    lines = ["original_bus,retained_bus"]
    lines += [f"{o},{t}" for o, t in sorted(mapping.pairs)]
    return "\n".join(lines) + "\n"


def parse_mapping(text: str) -> BusMapping:
    rows = [r.strip() for r in text.splitlines() if r.strip()]
    if not rows or rows[0].lower() != "original_bus,retained_bus":
        raise MappingFormatError("missing original_bus,retained_bus header")
    pairs = []
    for row_no, row in enumerate(rows[1:], start=2):
        parts = row.split(",")
        if len(parts) != 2:
            raise MappingFormatError(f"row {row_no}: expected 2 fields")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise MappingFormatError(f"row {row_no}: malformed ids {row!r}")
    seen = set()
    for o, _ in pairs:
        if o in seen:
            raise MappingFormatError(f"duplicate original bus {o}")
        seen.add(o)
    return BusMapping(tuple(pairs))


def write_features(features) -> str:
    """Feature set as CSV rows entity_kind,id,reasons (reasons ;-joined)."""
    lines = ["entity_kind,id,reasons"]
    for bus_id in sorted(features.feature_buses):
        reasons = ";".join(sorted(features.reasons[("bus", bus_id)]))
        lines.append(f"bus,{bus_id},{reasons}")
    for branch_id in sorted(features.feature_branches):
        reasons = ";".join(sorted(features.reasons[("branch", branch_id)]))
        lines.append(f"branch,{branch_id},{reasons}")
    return "\n".join(lines) + "\n"


def write_selections(subgrids) -> str:
    """Subgrid list as CSV rows strategy,representative,member_buses."""
    lines = ["strategy,representative,member_buses"]
    for s in subgrids:
        members = ";".join(str(b) for b in sorted(s.buses))
        lines.append(f"{s.origin},{s.representative},{members}")
    return "\n".join(lines) + "\n"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_sweep_table(rows) -> str:
    lines = ["value,buses_removed,branches_removed,cycles_removed,eps_disp,eps_flow"]
    for r in rows:
        lines.append(
            ",".join(
                _cell(v)
                for v in (r.value, r.buses_removed, r.branches_removed, r.cycles_removed, r.eps_disp, r.eps_flow)
            )
        )
    return "\n".join(lines) + "\n"


def write_scenario_table(rows) -> str:
    lines = ["hour,status,eps_disp,eps_flow"]
    for r in rows:
        lines.append(",".join(_cell(v) for v in (r.hour, r.status, r.eps_disp, r.eps_flow)))
    return "\n".join(lines) + "\n"


def write_report(report) -> str:
    """Reduction report as deterministic structured text."""
    cfg = report.config
    out = []
    out.append("reduction report")
    out.append(f"grid: {report.grid_name}")
    out.append("")
    out.append("config:")
    for key in (
        "tau",
        "delta",
        "theta",
        "critical_limit_mw",
        "small_fraction",
        "loading_threshold",
        "length_threshold_km",
        "max_refinement_rounds",
        "tolerance",
    ):
        out.append(f"  {key}: {_cell(getattr(cfg, key))}")
    out.append("")
    out.append(f"initial: buses={report.initial_buses} branches={report.initial_branches} cycles={report.initial_cycles}")
    out.append(f"final:   buses={report.final_buses} branches={report.final_branches} cycles={report.final_cycles}")
    out.append("")
    out.append("stages:")
    out.append("  stage,buses_removed,branches_removed,cycles_removed,eps_disp,eps_flow")
    for s in report.stages:
        out.append(
            "  "
            + ",".join(
                _cell(v)
                for v in (s.stage, s.buses_removed, s.branches_removed, s.cycles_removed, s.eps_disp, s.eps_flow)
            )
        )
    out.append("")
    out.append(f"eps_disp: {_cell(report.eps_disp)}")
    out.append(f"eps_flow: {_cell(report.eps_flow)}")
    out.append("")
    out.append("critical generators per refinement round:")
    if report.critical_generators:
        for i, gens in enumerate(report.critical_generators, start=1):
            listed = ";".join(str(g) for g in gens) if gens else "-"
            out.append(f"  round {i}: {listed}")
    else:
        out.append("  none")
    out.append("")
    out.append("market-stage lmps (bus,price):")
    for bus_id, price in report.market_lmps:
        out.append(f"  {bus_id},{_cell(price)}")
    out.append("")
    out.append("bus mapping (original,retained):")
    for o, t in sorted(report.mapping.pairs):
        out.append(f"  {o},{t}")
    return "\n".join(out) + "\n"
