"""Subgrid selection strategies.

Three selectors propose feature-free subgrids for reduction: topological
(small sets hanging off a single corridor), electrical (corridors whose
equivalent impedance is small relative to the grid maximum), and market
(BFS clusters of near-equal locational prices). A fourth helper flags
generators whose dispatch moved too far between two solutions.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .dcopf import OpfSolution
from .features import FeatureSet
from .model import Corridor, Grid, corridor_adjacency, corridors
from .reduction import ELECTRICAL, MARKET, TOPOLOGY, Subgrid, contains_feature


@dataclass(frozen=True)
class SelectionConfig:
    small_fraction: float = 0.01
    tau: float = 0.05
    delta: float = 0.08

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise ValueError(f"tau must be in [0, 1], got {self.tau}")
        if not self.delta > 0.0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not 0.0 < self.small_fraction <= 1.0:
            raise ValueError(f"small_fraction must be in (0, 1], got {self.small_fraction}")


def _is_feature_corridor(corridor: Corridor, features: FeatureSet) -> bool:
    return any(b in features.feature_branches for b in corridor.branch_ids)


def _corridor_bridges(adj: dict[int, dict[int, Corridor]]) -> list[tuple[int, int]]:
    """Bridges of the corridor graph, iterative lowpoint search."""
    disc: dict[int, int] = {}
    low: dict[int, int] = {}
    bridges: list[tuple[int, int]] = []
    counter = 0
    for root in sorted(adj):
        if root in disc:
            continue
        disc[root] = low[root] = counter
        counter += 1
        stack: list[tuple[int | None, int, object]] = [(None, root, iter(sorted(adj[root])))]
        while stack:
            parent, u, children = stack[-1]
            pushed = False
            for v in children:
                if v not in disc:
                    disc[v] = low[v] = counter
                    counter += 1
                    stack.append((u, v, iter(sorted(adj[v]))))
                    pushed = True
                    break
                if v != parent:
                    low[u] = min(low[u], disc[v])
            if not pushed:
                stack.pop()
                if parent is not None:
                    low[parent] = min(low[parent], low[u])
                    if low[u] > disc[parent]:
                        bridges.append((min(parent, u), max(parent, u)))
    return bridges


def _cut_side(
    adj: dict[int, dict[int, Corridor]], start: int, blocked: tuple[int, int], limit: int
) -> frozenset[int] | None:
    """Buses reachable from start without crossing the blocked pair, or None
    once more than limit buses turn up."""
    a, b = blocked
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if {u, v} == {a, b}:
                continue
            if v not in seen:
                seen.add(v)
                if len(seen) > limit:
                    return None
                stack.append(v)
    return frozenset(seen)


def select_topological(grid: Grid, features: FeatureSet, small_limit: int) -> list[Subgrid]:
    """Maximal bus sets of at most small_limit buses tied to the rest of the
    grid by a single corridor, returned with their attachment bus as the
    representative; feature-containing subgrids are dropped."""
    adj = corridor_adjacency(grid)
    candidates: dict[frozenset[int], int] = {}
    for u, v in _corridor_bridges(adj):
        side_v = _cut_side(adj, v, (u, v), small_limit)
        if side_v is not None and u not in side_v:
            candidates[side_v] = u
        side_u = _cut_side(adj, u, (u, v), small_limit)
        if side_u is not None and v not in side_u:
            candidates[side_u] = v

    # keep only the maximal candidate sets
    by_size = sorted(candidates, key=lambda s: (-len(s), min(s)))
    maximal: list[frozenset[int]] = []
    for s in by_size:
        if not any(s < kept for kept in maximal):
            maximal.append(s)

    survivors = []
    for s in maximal:
        attach = candidates[s]
        sub = Subgrid(buses=s | {attach}, representative=attach, origin=TOPOLOGY)
        if contains_feature(sub, grid, features):
            continue
        survivors.append((s, attach, sub))

    # accept greedily so the returned sets only ever share representatives
    used_members: set[int] = set()
    used_attachments: set[int] = set()
    accepted: list[Subgrid] = []
    for s, attach, sub in sorted(survivors, key=lambda t: (-len(t[0]), min(t[0]))):
        if s & used_members or s & used_attachments or attach in used_members:
            continue
        used_members |= s
        used_attachments.add(attach)
        accepted.append(sub)
    accepted.sort(key=lambda sub: min(sub.buses))
    return accepted


def select_electrical(grid: Grid, features: FeatureSet, tau: float) -> list[Subgrid]:
    """Terminal pairs of corridors with equivalent impedance magnitude at or
    below tau times the grid maximum."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    cors = corridors(grid)
    if not cors:
        return []
    z_max = max(abs(c.equivalent_series_impedance) for c in cors)
    threshold = tau * z_max
    adj = corridor_adjacency(grid, cors)

    out: list[Subgrid] = []
    for c in cors:
        if abs(c.equivalent_series_impedance) > threshold:
            continue
        if _is_feature_corridor(c, features):
            continue
        u, v = c.bus_pair
        fu, fv = u in features.feature_buses, v in features.feature_buses
        if fu and fv:
            continue  # whichever end is kept, the other is a lost feature
        if fu:
            rep = u
        elif fv:
            rep = v
        else:
            du, dv = len(adj[u]), len(adj[v])
            rep = u if du > dv else v if dv > du else min(u, v)
        out.append(Subgrid(buses=frozenset(c.bus_pair), representative=rep, origin=ELECTRICAL))
    return out


def select_market(grid: Grid, features: FeatureSet, solution: OpfSolution, delta: float) -> list[Subgrid]:
    """Price clusters grown by BFS from each candidate bus of corridor degree
    at least two, admitting a neighbor when its price stays within delta of
    the seed's and no feature blocks the step."""
    if not delta > 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    adj = corridor_adjacency(grid)
    lmp = solution.lmp
    absorbed: set[int] = set()
    clusters: list[Subgrid] = []
    for seed in sorted(adj):
        if len(adj[seed]) < 2 or seed in absorbed:
            continue
        seed_price = lmp[seed]
        cluster = {seed}
        q = deque([seed])
        while q:
            u = q.popleft()
            for v in sorted(adj[u]):
                if v in cluster:
                    continue
                if v in features.feature_buses:
                    continue
                if _is_feature_corridor(adj[u][v], features):
                    continue
                if abs(lmp[v] - seed_price) > delta:
                    continue
                # a feature corridor from v into the cluster would be
                # internalized by the reduction, so v stays out
                if any(
                    w in cluster and _is_feature_corridor(adj[v][w], features) for w in adj[v]
                ):
                    continue
                cluster.add(v)
                q.append(v)
        if len(cluster) >= 2:
            clusters.append(Subgrid(buses=frozenset(cluster), representative=seed, origin=MARKET))
            absorbed |= cluster
    return clusters


def find_critical_generators(
    original: OpfSolution, reduced: OpfSolution, limit_mw: float
) -> set[int]:
    """Generators whose dispatch moved by strictly more than limit_mw."""
    if set(original.dispatch) != set(reduced.dispatch):
        raise ValueError("mismatched generator sets between solutions")
    return {
        gid
        for gid, p in original.dispatch.items()
        if abs(reduced.dispatch[gid] - p) > limit_mw
    }
