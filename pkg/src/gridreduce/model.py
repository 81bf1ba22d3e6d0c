"""Immutable transmission grid data model.

Buses, branches, generators and loads are frozen dataclasses; a Grid is a
frozen container with cached id lookups. Parallel branches between the same
bus pair form a corridor with a parallel-equivalent series impedance, and all
graph-level operations (connectivity, cycle counting, adjacency) work on the
corridor graph rather than the raw branch multigraph.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Sequence

LINE = "line"
TRANSFORMER = "transformer"
CONVERTER = "converter"

BRANCH_KINDS = (LINE, TRANSFORMER, CONVERTER)


@dataclass(frozen=True)
class Bus:
    id: int
    base_kv: float
    shunt_conductance: float = 0.0  # siemens
    shunt_susceptance: float = 0.0  # siemens
    is_reference: bool = False


@dataclass(frozen=True)
class Branch:
    id: int
    src_bus: int
    dst_bus: int
    series_resistance: float  # ohms
    series_reactance: float  # ohms
    total_charging_susceptance: float = 0.0  # siemens
    rating: float | None = None  # MW, None = unlimited
    kind: str = LINE
    length_km: float | None = None  # None = unknown

    @property
    def series_impedance(self) -> complex:
        return complex(self.series_resistance, self.series_reactance)

    @property
    def terminals(self) -> tuple[int, int]:
        return (self.src_bus, self.dst_bus)


@dataclass(frozen=True)
class Generator:
    id: int
    bus: int
    p_min: float  # MW
    p_max: float  # MW
    cost_linear: float = 0.0  # currency/MWh
    cost_constant: float = 0.0  # currency/h
    is_conventional: bool = True


@dataclass(frozen=True)
class Load:
    id: int
    bus: int
    p_demand: float  # MW


@dataclass(frozen=True)
class Grid:
    """A complete network model. Immutable; all operations return new grids."""

    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    generators: tuple[Generator, ...] = ()
    loads: tuple[Load, ...] = ()
    name: str = ""

    def __post_init__(self):
        # Accept any iterable; store tuples so the grid is safely shareable.
        for f in ("buses", "branches", "generators", "loads"):
            v = getattr(self, f)
            if not isinstance(v, tuple):
                object.__setattr__(self, f, tuple(v))

    @cached_property
    def bus_by_id(self) -> dict[int, Bus]:
        return {b.id: b for b in self.buses}

    @cached_property
    def branch_by_id(self) -> dict[int, Branch]:
        return {b.id: b for b in self.branches}

    @cached_property
    def generator_by_id(self) -> dict[int, Generator]:
        return {g.id: g for g in self.generators}

    @cached_property
    def load_by_id(self) -> dict[int, Load]:
        return {l.id: l for l in self.loads}

    @cached_property
    def reference_bus(self) -> int | None:
        for b in self.buses:
            if b.is_reference:
                return b.id
        return None

    def total_load(self) -> float:
        return sum(l.p_demand for l in self.loads)

    def total_shunt_susceptance(self) -> float:
        """Bus shunts plus branch charging; conserved under reduction."""
        return sum(b.shunt_susceptance for b in self.buses) + sum(
            br.total_charging_susceptance for br in self.branches
        )


@dataclass(frozen=True)
class Corridor:
    """All parallel branches between one unordered pair of buses."""

    bus_pair: tuple[int, int]  # sorted ascending
    branch_ids: tuple[int, ...]  # sorted ascending
    equivalent_series_impedance: complex

    def other_end(self, bus: int) -> int:
        a, b = self.bus_pair
        return b if bus == a else a


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    def __post_init__(self):
        if not isinstance(self.violations, tuple):
            object.__setattr__(self, "violations", tuple(self.violations))

    @property
    def is_valid(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.is_valid


def equivalent_series_impedance(impedances: Sequence[complex]) -> complex:
    """Parallel combination 1 / sum(1/z) of a nonempty list of impedances."""
    if not impedances:
        raise ValueError("no impedances given")
    total = 0j
    for z in impedances:
        z = complex(z)
        if abs(z) == 0.0:
            raise ValueError("short-circuit branch: zero-magnitude series impedance")
        total += 1.0 / z
    return 1.0 / total


def corridors(grid: Grid) -> tuple[Corridor, ...]:
    """Group branches by unordered terminal pair, sorted by pair."""
    groups: dict[tuple[int, int], list[Branch]] = {}
    for br in grid.branches:
        pair = (br.src_bus, br.dst_bus) if br.src_bus < br.dst_bus else (br.dst_bus, br.src_bus)
        groups.setdefault(pair, []).append(br)
    out = []
    for pair in sorted(groups):
        members = groups[pair]
        z_eq = equivalent_series_impedance([b.series_impedance for b in members])
        out.append(
            Corridor(
                bus_pair=pair,
                branch_ids=tuple(sorted(b.id for b in members)),
                equivalent_series_impedance=z_eq,
            )
        )
    return tuple(out)


def corridor_adjacency(grid: Grid, cors: Sequence[Corridor] | None = None) -> dict[int, dict[int, Corridor]]:
    """Adjacency of the corridor graph: bus -> neighbor bus -> corridor.

    Every bus of the grid appears as a key, isolated buses with an empty dict.
    """
    if cors is None:
        cors = corridors(grid)
    adj: dict[int, dict[int, Corridor]] = {b.id: {} for b in grid.buses}
    for c in cors:
        a, b = c.bus_pair
        adj[a][b] = c
        adj[b][a] = c
    return adj


def connected_components(grid: Grid) -> list[set[int]]:
    """Connected components of the corridor graph, largest first."""
    adj = corridor_adjacency(grid)
    seen: set[int] = set()
    comps: list[set[int]] = []
    for start in sorted(adj):
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in comp:
                    comp.add(v)
                    stack.append(v)
        seen |= comp
        comps.append(comp)
    comps.sort(key=lambda c: (-len(c), min(c)))
    return comps


def cycle_count(grid: Grid) -> int:
    """Independent cycles of the corridor graph: |E| - |V| + components."""
    cors = corridors(grid)
    if not grid.buses:
        return 0
    return len(cors) - len(grid.buses) + len(connected_components(grid))


def validate(grid: Grid) -> ValidationReport:
    """Check structural integrity; an empty report means the grid is valid."""
    v: list[Violation] = []

    def dup_check(kind: str, ids: Iterable[int]):
        seen: set[int] = set()
        for i in ids:
            if i in seen:
                v.append(Violation("duplicate_id", f"duplicate {kind} id {i}"))
            seen.add(i)

    dup_check("bus", (b.id for b in grid.buses))
    dup_check("branch", (b.id for b in grid.branches))
    dup_check("generator", (g.id for g in grid.generators))
    dup_check("load", (l.id for l in grid.loads))

    bus_ids = {b.id for b in grid.buses}
    for br in grid.branches:
        for end in (br.src_bus, br.dst_bus):
            if end not in bus_ids:
                v.append(
                    Violation("dangling_reference", f"branch {br.id} references missing bus {end}")
                )
        if br.src_bus == br.dst_bus:
            v.append(Violation("self_loop", f"branch {br.id} connects bus {br.src_bus} to itself"))
        if abs(br.series_impedance) == 0.0:
            v.append(Violation("nonpositive_impedance", f"branch {br.id} has zero series impedance"))
        if br.series_resistance < 0:
            v.append(
                Violation("nonpositive_impedance", f"branch {br.id} has negative series resistance")
            )
        if br.kind not in BRANCH_KINDS:
            v.append(Violation("unknown_kind", f"branch {br.id} has unknown kind {br.kind!r}"))
        if br.kind == LINE and br.src_bus in bus_ids and br.dst_bus in bus_ids:
            kv_s = grid.bus_by_id[br.src_bus].base_kv
            kv_d = grid.bus_by_id[br.dst_bus].base_kv
            if kv_s != kv_d:
                v.append(
                    Violation(
                        "voltage_mismatch",
                        f"line branch {br.id} spans base voltages {kv_s} and {kv_d} kV",
                    )
                )
    for g in grid.generators:
        if g.bus not in bus_ids:
            v.append(Violation("dangling_reference", f"generator {g.id} references missing bus {g.bus}"))
        if g.p_min > g.p_max:
            v.append(Violation("bad_limits", f"generator {g.id} has p_min > p_max"))
    for l in grid.loads:
        if l.bus not in bus_ids:
            v.append(Violation("dangling_reference", f"load {l.id} references missing bus {l.bus}"))

    refs = [b.id for b in grid.buses if b.is_reference]
    if not refs:
        v.append(Violation("missing_reference", "no reference bus"))
    elif len(refs) > 1:
        v.append(Violation("multiple_reference", f"multiple reference buses: {sorted(refs)}"))

    # Component check runs only on structurally sound graphs. Plain endpoint
    # adjacency here: impedance violations must not mask connectivity ones.
    if grid.buses and not any(x.code == "dangling_reference" for x in v):
        adj: dict[int, set[int]] = {b.id: set() for b in grid.buses}
        for br in grid.branches:
            adj[br.src_bus].add(br.dst_bus)
            adj[br.dst_bus].add(br.src_bus)
        seen: set[int] = set()
        comps: list[set[int]] = []
        for start in sorted(adj):
            if start in seen:
                continue
            comp = {start}
            stack = [start]
            while stack:
                u = stack.pop()
                for nb in adj[u]:
                    if nb not in comp:
                        comp.add(nb)
                        stack.append(nb)
            seen |= comp
            comps.append(comp)
        comps.sort(key=lambda c: (-len(c), min(c)))
        if len(comps) > 1:
            sizes = ", ".join(str(len(c)) for c in comps)
            v.append(Violation("disconnected", f"{len(comps)} components of sizes {sizes}"))

    return ValidationReport(tuple(v))


def scale_loads(grid: Grid, factor: float) -> Grid:
    """A copy of the grid with every load demand multiplied by factor."""
    return replace(grid, loads=tuple(replace(l, p_demand=l.p_demand * factor) for l in grid.loads))
