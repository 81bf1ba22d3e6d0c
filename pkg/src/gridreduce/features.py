"""Feature identification and depth-based refinement.

Features are entities that must survive reduction: transformer and converter
branches, branches loaded near their rating, long lines, the terminal buses
of conventional generators, the reference bus, and refinement buses added
around critical generators.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .model import CONVERTER, TRANSFORMER, Grid, corridor_adjacency
from .dcopf import OpfSolution, flows_at_limit

TRANSFORMER_REASON = "transformer"
CONVERTER_REASON = "converter"
CONGESTED = "congested"
LONG_LINE = "long_line"
GENERATOR_TERMINAL = "generator_terminal"
REFERENCE_BUS = "reference_bus"
REFINEMENT = "refinement"


@dataclass(frozen=True)
class FeatureSet:
    """Feature buses and branches with the reasons they were flagged."""

    feature_buses: frozenset[int] = frozenset()
    feature_branches: frozenset[int] = frozenset()
    # (entity kind, id) -> reason codes
    reasons: dict[tuple[str, int], frozenset[str]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "feature_buses", frozenset(self.feature_buses))
        object.__setattr__(self, "feature_branches", frozenset(self.feature_branches))

    def is_feature_bus(self, bus_id: int) -> bool:
        return bus_id in self.feature_buses

    def is_feature_branch(self, branch_id: int) -> bool:
        return branch_id in self.feature_branches


def _merge_reasons(
    reasons: dict[tuple[str, int], set[str]], kind: str, entity_id: int, reason: str
) -> None:
    reasons.setdefault((kind, entity_id), set()).add(reason)


def _freeze(buses: set[int], branches: set[int], reasons: dict[tuple[str, int], set[str]]) -> FeatureSet:
    return FeatureSet(
        feature_buses=frozenset(buses),
        feature_branches=frozenset(branches),
        reasons={k: frozenset(v) for k, v in sorted(reasons.items())},
    )


def identify(
    grid: Grid,
    solution: OpfSolution,
    loading_threshold: float = 0.95,
    length_threshold_km: float = 50.0,
) -> FeatureSet:
    """Flag the entities that reduction must keep, with reason codes."""
    buses: set[int] = set()
    branches: set[int] = set()
    reasons: dict[tuple[str, int], set[str]] = {}

    for br in grid.branches:
        if br.kind == TRANSFORMER:
            branches.add(br.id)
            _merge_reasons(reasons, "branch", br.id, TRANSFORMER_REASON)
        elif br.kind == CONVERTER:
            branches.add(br.id)
            _merge_reasons(reasons, "branch", br.id, CONVERTER_REASON)
        if br.length_km is not None and br.length_km >= length_threshold_km:
            branches.add(br.id)
            _merge_reasons(reasons, "branch", br.id, LONG_LINE)

    for br_id in flows_at_limit(solution, grid, loading_threshold):
        branches.add(br_id)
        _merge_reasons(reasons, "branch", br_id, CONGESTED)

    for g in grid.generators:
        if g.is_conventional:
            buses.add(g.bus)
            _merge_reasons(reasons, "bus", g.bus, GENERATOR_TERMINAL)

    ref = grid.reference_bus
    if ref is not None:
        buses.add(ref)
        _merge_reasons(reasons, "bus", ref, REFERENCE_BUS)

    return _freeze(buses, branches, reasons)


def add_refinement_features(
    grid: Grid, base: FeatureSet, critical_generators: set[int], depth: int
) -> FeatureSet:
    """Add every bus within `depth` corridor hops of a critical generator.

    The search runs on `grid`, so pass the original model to keep refinement
    geography independent of the current reduction state.
    """
    terminals = []
    for gid in sorted(critical_generators):
        gen = grid.generator_by_id.get(gid)
        if gen is None:
            raise ValueError(f"unknown generator id {gid}")
        terminals.append(gen.bus)

    adj = corridor_adjacency(grid)
    reached: set[int] = set()
    for start in terminals:
        # bounded BFS; revisiting via a shorter start is fine, sets dedupe
        seen = {start: 0}
        q = deque([start])
        while q:
            u = q.popleft()
            if seen[u] == depth:
                continue
            for v in adj[u]:
                if v not in seen:
                    seen[v] = seen[u] + 1
                    q.append(v)
        reached |= set(seen)

    buses = set(base.feature_buses)
    branches = set(base.feature_branches)
    reasons = {k: set(v) for k, v in base.reasons.items()}
    for bus_id in sorted(reached):
        buses.add(bus_id)
        _merge_reasons(reasons, "bus", bus_id, REFINEMENT)
    return _freeze(buses, branches, reasons)
