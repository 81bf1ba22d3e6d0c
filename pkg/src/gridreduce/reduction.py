"""Subgrid reduction onto representative buses.

A subgrid collapses onto its representative in four steps: generators and
loads re-terminate there, removed bus shunts sum onto it, boundary branches
re-terminate with ids and parameters untouched, and fully internal branches
disappear with their charging susceptance absorbed as a representative-bus
shunt. Nothing is ever created, so every entity of the reduced grid is an
original one.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .features import FeatureSet
from .io import BusMapping
from .model import Grid, corridor_adjacency

TOPOLOGY = "topology"
ELECTRICAL = "electrical"
MARKET = "market"


class SubgridError(Exception):
    pass


@dataclass(frozen=True)
class Subgrid:
    """A connected bus set to collapse onto its representative."""

    buses: frozenset[int]
    representative: int
    origin: str  # topology | electrical | market

    def __post_init__(self):
        object.__setattr__(self, "buses", frozenset(self.buses))


def contains_feature(subgrid: Subgrid, grid: Grid, features: FeatureSet) -> bool:
    """True iff reducing the subgrid would delete a feature entity."""
    return _offending_feature(subgrid, grid, features) is not None


def _offending_feature(subgrid: Subgrid, grid: Grid, features: FeatureSet) -> tuple[str, int] | None:
    for bus_id in sorted(subgrid.buses):
        if bus_id != subgrid.representative and bus_id in features.feature_buses:
            return ("bus", bus_id)
    for br in grid.branches:
        if br.id in features.feature_branches and br.src_bus in subgrid.buses and br.dst_bus in subgrid.buses:
            return ("branch", br.id)
    return None


def _check_subgrid(grid: Grid, subgrid: Subgrid) -> None:
    if subgrid.representative not in subgrid.buses:
        raise SubgridError(f"representative {subgrid.representative} is not a subgrid bus")
    missing = subgrid.buses - set(grid.bus_by_id)
    if missing:
        raise SubgridError(f"subgrid references missing buses {sorted(missing)}")
    # connectivity of the induced corridor subgraph
    adj = corridor_adjacency(grid)
    seen = {subgrid.representative}
    stack = [subgrid.representative]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if v in subgrid.buses and v not in seen:
                seen.add(v)
                stack.append(v)
    if seen != subgrid.buses:
        raise SubgridError(f"subgrid is not connected: {sorted(subgrid.buses - seen)} unreachable")


def apply_mapping(grid: Grid, mapping: BusMapping) -> Grid:
    """Replay a bus mapping: re-terminate, absorb shunts and charging, drop
    removed buses and internalized branches.

    Equivalent to reducing the mapping's bus groups one at a time.
    """
    mapping.check_consistent()
    targets = mapping.as_dict
    grid_bus_ids = set(grid.bus_by_id)
    unknown = set(targets) - grid_bus_ids
    if unknown:
        raise ValueError(f"mapping references unknown buses {sorted(unknown)}")
    uncovered = grid_bus_ids - set(targets)
    if uncovered:
        raise ValueError(f"mapping does not cover buses {sorted(uncovered)}")

    extra_g: dict[int, float] = {}
    extra_b: dict[int, float] = {}
    for bus in grid.buses:
        t = targets[bus.id]
        if t != bus.id:
            extra_g[t] = extra_g.get(t, 0.0) + bus.shunt_conductance
            extra_b[t] = extra_b.get(t, 0.0) + bus.shunt_susceptance

    branches = []
    for br in grid.branches:
        s, d = targets[br.src_bus], targets[br.dst_bus]
        if s == d:
            # internalized; charging becomes a representative-bus shunt
            extra_b[s] = extra_b.get(s, 0.0) + br.total_charging_susceptance
            continue
        if s != br.src_bus or d != br.dst_bus:
            br = replace(br, src_bus=s, dst_bus=d)
        branches.append(br)

    buses = []
    for bus in grid.buses:
        if targets[bus.id] != bus.id:
            continue
        if bus.id in extra_g or bus.id in extra_b:
            bus = replace(
                bus,
                shunt_conductance=bus.shunt_conductance + extra_g.get(bus.id, 0.0),
                shunt_susceptance=bus.shunt_susceptance + extra_b.get(bus.id, 0.0),
            )
        buses.append(bus)

    generators = tuple(
        replace(g, bus=targets[g.bus]) if targets[g.bus] != g.bus else g for g in grid.generators
    )
    loads = tuple(replace(l, bus=targets[l.bus]) if targets[l.bus] != l.bus else l for l in grid.loads)
    return Grid(buses=tuple(buses), branches=tuple(branches), generators=generators, loads=loads, name=grid.name)


def reduce_subgrid(
    grid: Grid, subgrid: Subgrid, features: FeatureSet | None = None
) -> tuple[Grid, BusMapping]:
    """Collapse one subgrid onto its representative."""
    _check_subgrid(grid, subgrid)
    if features is not None:
        offender = _offending_feature(subgrid, grid, features)
        if offender is not None:
            kind, entity_id = offender
            raise SubgridError(f"subgrid contains feature {kind} {entity_id}")
    rep = subgrid.representative
    mapping = BusMapping(
        tuple((b.id, rep if b.id in subgrid.buses else b.id) for b in grid.buses)
    )
    return apply_mapping(grid, mapping), mapping


def apply_all(
    grid: Grid, subgrids: list[Subgrid], features: FeatureSet | None = None
) -> tuple[Grid, BusMapping]:
    """Merge overlapping subgrids, drop any whose merge traps a feature,
    then reduce the rest in one deterministic pass."""
    identity = BusMapping.identity(b.id for b in grid.buses)
    if not subgrids:
        return grid, identity

    for s in subgrids:
        _check_subgrid(grid, s)

    # union-find over shared buses
    parent = list(range(len(subgrids)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner: dict[int, int] = {}
    for i, s in enumerate(subgrids):
        for bus_id in s.buses:
            if bus_id in owner:
                ri, rj = find(i), find(owner[bus_id])
                if ri != rj:
                    parent[ri] = rj
            else:
                owner[bus_id] = i

    groups: dict[int, list[Subgrid]] = {}
    for i, s in enumerate(subgrids):
        groups.setdefault(find(i), []).append(s)

    adj = corridor_adjacency(grid)
    merged: list[Subgrid] = []
    for root in sorted(groups, key=lambda r: min(min(s.buses) for s in groups[r])):
        members = groups[root]
        if len(members) == 1:
            merged.append(members[0])
            continue
        buses = frozenset().union(*(s.buses for s in members))
        rep = _merged_representative(members, adj, features)
        origin = members[0].origin if len({s.origin for s in members}) == 1 else "merged"
        merged.append(Subgrid(buses=buses, representative=rep, origin=origin))

    kept = []
    for s in merged:
        if features is not None and contains_feature(s, grid, features):
            # merging made a feature internal; reducing it would break
            # feature preservation, so the whole group is skipped
            continue
        kept.append(s)

    targets = {b.id: b.id for b in grid.buses}
    for s in kept:
        for bus_id in s.buses:
            targets[bus_id] = s.representative
    mapping = BusMapping(tuple(sorted(targets.items())))
    return apply_mapping(grid, mapping), mapping


def _merged_representative(
    members: list[Subgrid], adj: dict[int, dict], features: FeatureSet | None
) -> int:
    candidates = sorted({s.representative for s in members})
    if features is not None:
        flagged = [c for c in candidates if c in features.feature_buses]
        if len(flagged) == 1:
            return flagged[0]
    best_degree = max(len(adj[c]) for c in candidates)
    return min(c for c in candidates if len(adj[c]) == best_degree)
