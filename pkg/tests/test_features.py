"""Feature identification and refinement-depth tests."""

from __future__ import annotations

import random

import pytest

from gridreduce import (
    Branch,
    Bus,
    FeatureSet,
    Generator,
    Grid,
    Load,
    add_refinement_features,
    build_problem,
    identify,
    solve,
    write_features,
)

import oracles
from gridgen import random_grid
from test_dcopf import congested_two_bus, uncongested_two_bus


def _bus(i, ref=False):
    return Bus(id=i, base_kv=110.0, is_reference=ref)


def _solved(grid):
    sol = solve(build_problem(grid))
    assert sol.status == "optimal"
    return sol


def test_transformer_branch_flagged():
    grid = Grid(
        buses=(_bus(1, ref=True), _bus(2), _bus(3)),
        branches=(
            Branch(1, 1, 2, 0.1, 1.0),
            Branch(2, 2, 3, 0.1, 1.0, kind="transformer"),
        ),
        generators=(Generator(1, 1, 0.0, 50.0, cost_linear=10.0, is_conventional=False),),
        loads=(Load(1, 3, 10.0),),
    )
    fs = identify(grid, _solved(grid))
    assert fs.feature_branches == frozenset({2})
    assert fs.reasons[("branch", 2)] == frozenset({"transformer"})
    # non-conventional generator terminal stays unflagged; reference bus stays
    assert fs.feature_buses == frozenset({1})
    assert fs.reasons[("bus", 1)] == frozenset({"reference_bus"})


def test_congested_hand_case_features():
    grid = congested_two_bus()
    fs = identify(grid, _solved(grid), loading_threshold=0.95)
    assert fs.reasons[("branch", 1)] == frozenset({"congested"})
    assert fs.feature_buses == frozenset({1, 2})
    assert "generator_terminal" in fs.reasons[("bus", 1)]
    assert "generator_terminal" in fs.reasons[("bus", 2)]
    assert "reference_bus" in fs.reasons[("bus", 1)]


def test_uncongested_case_has_no_congested_branch():
    grid = uncongested_two_bus()
    fs = identify(grid, _solved(grid), loading_threshold=0.95)
    assert fs.feature_branches == frozenset()


def test_long_line_needs_a_known_length():
    grid = uncongested_two_bus()
    with_len = Grid(
        grid.buses,
        (Branch(1, 1, 2, 0.5, 5.0, rating=100.0, length_km=62.0),),
        grid.generators,
        grid.loads,
    )
    fs = identify(with_len, _solved(with_len), length_threshold_km=50.0)
    assert fs.reasons[("branch", 1)] == frozenset({"long_line"})
    # unknown length: never a long-line feature, whatever the threshold
    fs_unknown = identify(grid, _solved(grid), length_threshold_km=0.0)
    assert fs_unknown.feature_branches == frozenset()


def test_lowering_threshold_never_drops_congested_features():
    grid = congested_two_bus()
    sol = _solved(grid)
    high = identify(grid, sol, loading_threshold=0.95)
    low = identify(grid, sol, loading_threshold=0.5)
    congested_high = {k for k in high.feature_branches if "congested" in high.reasons[("branch", k)]}
    congested_low = {k for k in low.feature_branches if "congested" in low.reasons[("branch", k)]}
    assert congested_high <= congested_low


def test_every_feature_has_a_reason():
    for seed in range(20):
        rng = random.Random(seed)
        grid = random_grid(rng, n_buses=20, extra_edges=6, transformer_p=0.2)
        fs = identify(grid, _solved(grid))
        for bus_id in fs.feature_buses:
            assert fs.reasons[("bus", bus_id)]
        for br_id in fs.feature_branches:
            assert fs.reasons[("branch", br_id)]


def test_identify_is_deterministic():
    rng = random.Random(77)
    grid = random_grid(rng, n_buses=25, extra_edges=8, transformer_p=0.15)
    sol = _solved(grid)
    assert identify(grid, sol) == identify(grid, sol)
    assert write_features(identify(grid, sol)) == write_features(identify(grid, sol))


# -- refinement ---------------------------------------------------------------

def _path_grid():
    # a - b - c - d as buses 1..4, generator at bus 1
    return Grid(
        buses=(_bus(1, ref=True), _bus(2), _bus(3), _bus(4)),
        branches=(Branch(1, 1, 2, 0.1, 1.0), Branch(2, 2, 3, 0.1, 1.0), Branch(3, 3, 4, 0.1, 1.0)),
        generators=(Generator(1, 1, 0.0, 50.0, cost_linear=10.0),),
        loads=(Load(1, 4, 10.0),),
    )


def test_zero_depth_adds_only_terminals():
    grid = _path_grid()
    out = add_refinement_features(grid, FeatureSet(), {1}, depth=0)
    assert out.feature_buses == frozenset({1})
    assert out.reasons[("bus", 1)] == frozenset({"refinement"})


def test_depth_two_on_path_reaches_three_buses():
    grid = _path_grid()
    out = add_refinement_features(grid, FeatureSet(), {1}, depth=2)
    assert out.feature_buses == frozenset({1, 2, 3})


def test_refinement_matches_floyd_warshall_oracle():
    for seed in range(15):
        rng = random.Random(400 + seed)
        grid = random_grid(rng, n_buses=30, extra_edges=10, parallels=3, n_gens=3)
        pairs = sorted(oracles.corridors_by_pair(grid.branches))
        critical = {grid.generators[0].id, grid.generators[-1].id}
        terminals = [grid.generator_by_id[g].bus for g in sorted(critical)]
        for depth in (0, 1, 3):
            expected = oracles.within_depth_floyd_warshall(
                [b.id for b in grid.buses], pairs, terminals, depth
            )
            out = add_refinement_features(grid, FeatureSet(), critical, depth)
            assert out.feature_buses == frozenset(expected)


def test_refinement_monotone_in_depth():
    rng = random.Random(99)
    grid = random_grid(rng, n_buses=25, extra_edges=8, n_gens=2)
    critical = {grid.generators[0].id}
    previous = frozenset()
    for depth in range(5):
        out = add_refinement_features(grid, FeatureSet(), critical, depth)
        assert previous <= out.feature_buses
        previous = out.feature_buses


def test_refinement_preserves_base_features_and_reasons():
    grid = _path_grid()
    base = identify(grid, _solved(grid))
    out = add_refinement_features(grid, base, {1}, depth=1)
    assert base.feature_buses <= out.feature_buses
    assert base.feature_branches == out.feature_branches
    assert "reference_bus" in out.reasons[("bus", 1)]
    assert "refinement" in out.reasons[("bus", 1)]


def test_unknown_critical_generator_rejected():
    grid = _path_grid()
    with pytest.raises(ValueError, match="unknown generator"):
        add_refinement_features(grid, FeatureSet(), {9}, depth=1)
