"""Subgrid reduction: the four collapse steps, merging, and preservation."""

from __future__ import annotations

import random

import pytest

from gridreduce import (
    Branch,
    Bus,
    BusMapping,
    FeatureSet,
    Generator,
    Grid,
    Load,
    Subgrid,
    SubgridError,
    apply_all,
    apply_mapping,
    connected_components,
    contains_feature,
    corridor_adjacency,
    reduce_subgrid,
    validate,
)

import gridgen


def _bus(i, ref=False, b_shunt=0.0):
    return Bus(id=i, base_kv=110.0, shunt_susceptance=b_shunt, is_reference=ref)


def _line(i, a, b, charging=0.0):
    return Branch(
        id=i, src_bus=a, dst_bus=b, series_resistance=0.1, series_reactance=1.0,
        total_charging_susceptance=charging,
    )


def pendant_pair() -> Grid:
    return Grid(
        buses=(_bus(1, ref=True), _bus(2)),
        branches=(_line(1, 1, 2),),
        generators=(Generator(1, 1, 0.0, 50.0, cost_linear=10.0),),
        loads=(Load(1, 2, 10.0),),
    )


# -- contains_feature ---------------------------------------------------------

def test_feature_at_representative_is_not_offending():
    grid = pendant_pair()
    features = FeatureSet(feature_buses={1}, reasons={("bus", 1): frozenset({"generator_terminal"})})
    sub = Subgrid(buses={1, 2}, representative=1, origin="topology")
    assert contains_feature(sub, grid, features) is False
    reduced, _ = reduce_subgrid(grid, sub, features)
    assert 1 in reduced.bus_by_id  # the feature bus survives


def test_feature_at_member_is_offending():
    grid = pendant_pair()
    features = FeatureSet(feature_buses={2}, reasons={("bus", 2): frozenset({"generator_terminal"})})
    sub = Subgrid(buses={1, 2}, representative=1, origin="topology")
    assert contains_feature(sub, grid, features) is True


def test_internal_transformer_branch_is_offending():
    grid = Grid(
        buses=(_bus(1, ref=True), _bus(2)),
        branches=(Branch(1, 1, 2, 0.1, 1.0, kind="transformer"),),
    )
    features = FeatureSet(feature_branches={1}, reasons={("branch", 1): frozenset({"transformer"})})
    sub = Subgrid(buses={1, 2}, representative=1, origin="topology")
    assert contains_feature(sub, grid, features) is True
    with pytest.raises(SubgridError, match="feature branch 1"):
        reduce_subgrid(grid, sub, features)


# -- reduce_subgrid -----------------------------------------------------------

def test_pendant_load_moves_to_representative():
    grid = pendant_pair()
    sub = Subgrid(buses={1, 2}, representative=1, origin="topology")
    reduced, mapping = reduce_subgrid(grid, sub)
    assert [b.id for b in reduced.buses] == [1]
    assert reduced.branches == ()
    assert reduced.loads[0].bus == 1
    assert reduced.loads[0].p_demand == 10.0
    assert mapping.target(2) == 1
    assert mapping.target(1) == 1


def test_internal_charging_becomes_representative_shunt():
    grid = Grid(
        buses=(_bus(1, ref=True), _bus(2), _bus(3)),
        branches=(_line(1, 1, 2, charging=0.02), _line(2, 2, 3)),
    )
    sub = Subgrid(buses={1, 2}, representative=1, origin="electrical")
    reduced, _ = reduce_subgrid(grid, sub)
    assert reduced.bus_by_id[1].shunt_susceptance == pytest.approx(0.02)
    # the boundary branch re-terminates, parameters and id unchanged
    (br,) = reduced.branches
    assert br.id == 2
    assert {br.src_bus, br.dst_bus} == {1, 3}
    assert br.series_reactance == 1.0


def test_island_reduction_conserves_grid_totals():
    grid = Grid(
        buses=(
            _bus(1, ref=True, b_shunt=0.001),
            _bus(2),
            _bus(3),
            _bus(4, b_shunt=0.004),
            _bus(5),
            _bus(6, b_shunt=0.002),
            _bus(7),
        ),
        branches=(
            _line(1, 1, 2, charging=0.001),
            _line(2, 2, 3),
            _line(3, 1, 3),
            _line(4, 1, 4),  # single attachment corridor
            _line(5, 4, 5, charging=0.003),
            _line(6, 5, 6),
            _line(7, 6, 7, charging=0.002),
            _line(8, 4, 7),
        ),
        generators=(Generator(1, 2, 0.0, 90.0, cost_linear=12.0),),
        loads=(Load(1, 5, 20.0), Load(2, 7, 5.0), Load(3, 3, 30.0)),
    )
    before_load = grid.total_load()
    before_shunt = grid.total_shunt_susceptance()
    before_cap = sum(g.p_max for g in grid.generators)

    sub = Subgrid(buses={1, 4, 5, 6, 7}, representative=1, origin="topology")
    reduced, mapping = reduce_subgrid(grid, sub)

    assert reduced.total_load() == pytest.approx(before_load)
    assert reduced.total_shunt_susceptance() == pytest.approx(before_shunt)
    assert sum(g.p_max for g in reduced.generators) == before_cap
    assert len(reduced.generators) == len(grid.generators)
    assert sorted(b.id for b in reduced.buses) == [1, 2, 3]
    for island_bus in (4, 5, 6, 7):
        assert mapping.target(island_bus) == 1


def test_reduction_can_create_parallel_branches_kept_distinct():
    grid = Grid(
        buses=(_bus(1, ref=True), _bus(2), _bus(3), _bus(4)),
        branches=(_line(1, 1, 2), _line(2, 2, 3), _line(3, 4, 2), _line(4, 4, 3)),
    )
    sub = Subgrid(buses={1, 2, 3}, representative=1, origin="topology")
    reduced, _ = reduce_subgrid(grid, sub)
    ends = sorted((min(b.src_bus, b.dst_bus), max(b.src_bus, b.dst_bus)) for b in reduced.branches)
    assert ends == [(1, 4), (1, 4)]
    assert sorted(b.id for b in reduced.branches) == [3, 4]


def test_subgrid_validity_checks():
    grid = pendant_pair()
    with pytest.raises(SubgridError, match="not a subgrid bus"):
        reduce_subgrid(grid, Subgrid(buses={2}, representative=1, origin="topology"))
    with pytest.raises(SubgridError, match="missing buses"):
        reduce_subgrid(grid, Subgrid(buses={1, 9}, representative=1, origin="topology"))
    disconnected = Grid(
        buses=(_bus(1, ref=True), _bus(2), _bus(3)),
        branches=(_line(1, 1, 2), _line(2, 2, 3)),
    )
    with pytest.raises(SubgridError, match="not connected"):
        reduce_subgrid(disconnected, Subgrid(buses={1, 3}, representative=1, origin="topology"))


# -- apply_mapping ------------------------------------------------------------

def test_apply_mapping_equals_sequential_reduction():
    rng = random.Random(21)
    grid = gridgen.pendant_grid(rng, n_core=8, n_chains=3, chain_len=3)
    adj = corridor_adjacency(grid)
    # two disjoint two-bus groups picked from the first chain ends
    chain_buses = sorted(b.id for b in grid.buses if len(adj[b.id]) == 1)
    assert len(chain_buses) >= 2
    t1, t2 = chain_buses[0], chain_buses[1]
    n1 = next(iter(adj[t1]))
    n2 = next(iter(adj[t2]))
    sub1 = Subgrid(buses={t1, n1}, representative=n1, origin="topology")
    sub2 = Subgrid(buses={t2, n2}, representative=n2, origin="topology")

    step1, m1 = reduce_subgrid(grid, sub1)
    step2, m2 = reduce_subgrid(step1, sub2)
    combined = m1.compose(m2)
    assert apply_mapping(grid, combined) == step2


def test_apply_mapping_rejects_partial_or_alien_mappings():
    grid = pendant_pair()
    with pytest.raises(ValueError, match="does not cover"):
        apply_mapping(grid, BusMapping(((1, 1),)))
    with pytest.raises(ValueError, match="unknown buses"):
        apply_mapping(grid, BusMapping(((1, 1), (2, 2), (9, 9))))
    with pytest.raises(ValueError, match="map to itself"):
        apply_mapping(grid, BusMapping(((1, 2), (2, 1))))


# -- apply_all ----------------------------------------------------------------

def test_two_disjoint_pendants_removed_together():
    grid = Grid(
        buses=(_bus(1, ref=True), _bus(2), _bus(3), _bus(4)),
        branches=(_line(1, 1, 2), _line(2, 1, 3), _line(3, 3, 4)),
        loads=(Load(1, 2, 5.0), Load(2, 4, 7.0)),
    )
    subs = [
        Subgrid(buses={1, 2}, representative=1, origin="topology"),
        Subgrid(buses={3, 4}, representative=3, origin="topology"),
    ]
    reduced, mapping = apply_all(grid, subs)
    assert sorted(b.id for b in reduced.buses) == [1, 3]
    non_identity = [(o, t) for o, t in mapping.pairs if o != t]
    assert non_identity == [(2, 1), (4, 3)]
    assert reduced.total_load() == pytest.approx(12.0)


def test_overlapping_subgrids_merge_to_one_representative():
    grid = Grid(
        buses=(_bus(1, ref=True), _bus(2), _bus(3), _bus(4)),
        branches=(_line(1, 1, 2), _line(2, 2, 3), _line(3, 3, 4), _line(4, 4, 1)),
    )
    subs = [
        Subgrid(buses={1, 2}, representative=1, origin="electrical"),
        Subgrid(buses={2, 3}, representative=2, origin="electrical"),
    ]
    reduced, mapping = apply_all(grid, subs)
    targets = {mapping.target(b) for b in (1, 2, 3)}
    assert len(targets) == 1
    rep = targets.pop()
    assert rep in {1, 2}
    assert sorted(b.id for b in reduced.buses) == sorted({rep, 4})


def test_merged_representative_prefers_the_single_feature_bus():
    grid = Grid(
        buses=(_bus(1, ref=True), _bus(2), _bus(3)),
        branches=(_line(1, 1, 2), _line(2, 2, 3), _line(3, 1, 3)),
    )
    features = FeatureSet(feature_buses={3}, reasons={("bus", 3): frozenset({"generator_terminal"})})
    subs = [
        Subgrid(buses={1, 3}, representative=3, origin="electrical"),
        Subgrid(buses={1, 2}, representative=1, origin="electrical"),
    ]
    reduced, mapping = apply_all(grid, subs, features)
    assert mapping.target(1) == 3
    assert mapping.target(2) == 3
    assert 3 in reduced.bus_by_id


def test_merge_that_would_trap_a_feature_is_skipped():
    # bus 2 is a feature; each subgrid alone keeps it as representative, but
    # the merged group would have to delete it, so the group is dropped
    grid = Grid(
        buses=(_bus(1, ref=True), _bus(2), _bus(3)),
        branches=(_line(1, 1, 2), _line(2, 2, 3), _line(3, 1, 3)),
    )
    features = FeatureSet(
        feature_buses={1, 3},
        reasons={("bus", 1): frozenset({"reference_bus"}), ("bus", 3): frozenset({"generator_terminal"})},
    )
    subs = [
        Subgrid(buses={1, 2}, representative=1, origin="electrical"),
        Subgrid(buses={2, 3}, representative=3, origin="electrical"),
    ]
    reduced, mapping = apply_all(grid, subs, features)
    assert reduced == grid
    assert mapping == BusMapping.identity([1, 2, 3])


def test_apply_all_empty_is_identity():
    grid = pendant_pair()
    reduced, mapping = apply_all(grid, [])
    assert reduced == grid
    assert mapping == BusMapping.identity([1, 2])


def _random_disjoint_subgrids(grid: Grid, rng: random.Random, count: int) -> list[Subgrid]:
    adj = corridor_adjacency(grid)
    used: set[int] = set()
    subs: list[Subgrid] = []
    ids = [b.id for b in grid.buses]
    rng.shuffle(ids)
    for start in ids:
        if len(subs) == count:
            break
        if start in used:
            continue
        group = {start}
        frontier = [start]
        size = rng.randint(2, 4)
        while frontier and len(group) < size:
            u = frontier.pop()
            for v in sorted(adj[u]):
                if v not in used and v not in group and len(group) < size:
                    group.add(v)
                    frontier.append(v)
        if len(group) < 2:
            continue
        subs.append(Subgrid(buses=frozenset(group), representative=min(group), origin="market"))
        used |= group
    return subs


def test_apply_all_is_order_invariant():
    rng = random.Random(31)
    grid = gridgen.random_grid(rng, n_buses=100, extra_edges=30, n_gens=4)
    subs = _random_disjoint_subgrids(grid, rng, 20)
    assert len(subs) >= 15

    shuffle_a = subs[:]
    shuffle_b = subs[:]
    random.Random(1).shuffle(shuffle_a)
    random.Random(2).shuffle(shuffle_b)
    grid_a, map_a = apply_all(grid, shuffle_a)
    grid_b, map_b = apply_all(grid, shuffle_b)
    assert grid_a == grid_b
    assert map_a == map_b


# -- preservation properties --------------------------------------------------

def test_structure_conservation_and_connectivity_on_random_reductions():
    for seed in range(25):
        rng = random.Random(1200 + seed)
        grid = gridgen.random_grid(rng, n_buses=40, extra_edges=12, parallels=3, n_gens=3)
        subs = _random_disjoint_subgrids(grid, rng, 6)
        if not subs:
            continue
        reduced, mapping = apply_all(grid, subs)

        # structure: nothing new, ids are inherited
        assert {b.id for b in reduced.buses} <= {b.id for b in grid.buses}
        assert {b.id for b in reduced.branches} <= {b.id for b in grid.branches}
        assert {g.id for g in reduced.generators} == {g.id for g in grid.generators}

        # conservation
        assert reduced.total_load() == pytest.approx(grid.total_load())
        assert reduced.total_shunt_susceptance() == pytest.approx(grid.total_shunt_susceptance())

        # mapping totality and idempotence
        assert mapping.original_ids == {b.id for b in grid.buses}
        mapping.check_consistent()
        assert mapping.retained_ids == {b.id for b in reduced.buses}

        # connectivity survives
        assert len(connected_components(reduced)) == 1
        report = validate(reduced)
        assert report.is_valid, [v.message for v in report.violations]


def test_feature_preservation_under_filtered_reduction():
    from gridreduce import build_problem, identify, solve

    for seed in range(15):
        rng = random.Random(1500 + seed)
        grid = gridgen.random_grid(rng, n_buses=30, extra_edges=10, transformer_p=0.2, n_gens=3)
        sol = solve(build_problem(grid))
        assert sol.status == "optimal"
        features = identify(grid, sol)
        candidates = _random_disjoint_subgrids(grid, rng, 8)
        kept = [s for s in candidates if not contains_feature(s, grid, features)]
        reduced, _ = apply_all(grid, kept, features)
        for bus_id in features.feature_buses:
            assert bus_id in reduced.bus_by_id
        for br_id in features.feature_branches:
            assert br_id in reduced.branch_by_id
