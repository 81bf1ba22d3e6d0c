"""Combined reduction pipeline, error metrics, sweeps and scenario checks.

The pipeline solves the reference OPF, identifies features, then reduces in
three stages: topological subgrids, electrically coupled corridors iterated
to a fixed point with critical-generator refinement, and market clusters on
the current model's prices. Errors compare each stage against the original
reference solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .dcopf import OPTIMAL, OpfSolution, build_problem, solve
from .features import FeatureSet, add_refinement_features, identify
from .io import BusMapping, LoadProfile
from .model import Grid, cycle_count, scale_loads, validate
from .reduction import apply_all
from .selection import (
    SelectionConfig,
    find_critical_generators,
    select_electrical,
    select_market,
    select_topological,
)


class PipelineInfeasibleError(Exception):
    """An OPF stopped the pipeline; carries the stage it happened in."""

    def __init__(self, stage: str, status: str):
        self.stage = stage
        self.status = status
        super().__init__(f"OPF {status} at stage {stage}")


@dataclass(frozen=True)
class PipelineConfig:
    tau: float = 0.05
    delta: float = 0.08
    theta: int = 4
    critical_limit_mw: float = 10.0
    small_fraction: float = 0.01
    loading_threshold: float = 0.95
    length_threshold_km: float = 50.0
    max_refinement_rounds: int = 5
    tolerance: float = 1e-6

    def __post_init__(self):
        SelectionConfig(small_fraction=self.small_fraction, tau=self.tau, delta=self.delta)
        if self.theta < 0 or self.theta != int(self.theta):
            raise ValueError(f"theta must be a nonnegative integer, got {self.theta}")
        if self.critical_limit_mw < 0:
            raise ValueError(f"critical_limit_mw must be nonnegative, got {self.critical_limit_mw}")
        if self.loading_threshold < 0:
            raise ValueError(f"loading_threshold must be nonnegative, got {self.loading_threshold}")
        if self.length_threshold_km < 0:
            raise ValueError(f"length_threshold_km must be nonnegative, got {self.length_threshold_km}")
        if self.max_refinement_rounds < 1:
            raise ValueError(f"max_refinement_rounds must be positive, got {self.max_refinement_rounds}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")


@dataclass(frozen=True)
class StageRecord:
    stage: str
    buses_removed: int
    branches_removed: int
    cycles_removed: int
    eps_disp: float
    eps_flow: float


@dataclass(frozen=True)
class ReductionReport:
    grid_name: str
    config: PipelineConfig
    initial_buses: int
    initial_branches: int
    initial_cycles: int
    stages: tuple[StageRecord, ...]
    final_buses: int
    final_branches: int
    final_cycles: int
    eps_disp: float
    eps_flow: float
    mapping: BusMapping
    critical_generators: tuple[tuple[int, ...], ...]
    market_lmps: tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class SweepRow:
    value: float
    buses_removed: int | None
    branches_removed: int | None
    cycles_removed: int | None
    eps_disp: float | None
    eps_flow: float | None
    status: str = "ok"


@dataclass(frozen=True)
class ScenarioRow:
    hour: int
    status: str
    eps_disp: float | None
    eps_flow: float | None


def dispatch_error(original: OpfSolution, reduced: OpfSolution) -> float:
    """Contribution-weighted mean relative dispatch error."""
    if set(original.dispatch) != set(reduced.dispatch):
        raise ValueError("mismatched generator sets between solutions")
    denominator = sum(abs(p) for p in original.dispatch.values())
    if denominator == 0.0:
        raise ValueError("degenerate reference dispatch")
    numerator = sum(abs(reduced.dispatch[g] - p) for g, p in original.dispatch.items())
    return numerator / denominator


def flow_error(original: OpfSolution, reduced: OpfSolution, reduced_branch_ids: set[int]) -> float:
    """Contribution-weighted mean relative flow error over retained branches."""
    missing = set(reduced_branch_ids) - set(original.flow)
    if missing:
        raise ValueError(f"retained branches {sorted(missing)} absent from the original solution")
    denominator = sum(original.flow[k] for k in reduced_branch_ids)
    if denominator == 0.0:
        raise ValueError("degenerate reference flows")
    numerator = sum(abs(reduced.flow[k] - original.flow[k]) for k in reduced_branch_ids)
    return numerator / denominator


def _solve_grid(grid: Grid, tolerance: float, stage: str) -> OpfSolution:
    solution = solve(build_problem(grid), tolerance)
    if solution.status != OPTIMAL:
        raise PipelineInfeasibleError(stage, solution.status)
    return solution


def _counts(grid: Grid) -> tuple[int, int, int]:
    return len(grid.buses), len(grid.branches), cycle_count(grid)


def _stage_record(stage: str, before: Grid, after: Grid, base: OpfSolution, sol: OpfSolution) -> StageRecord:
    b0, r0, c0 = _counts(before)
    b1, r1, c1 = _counts(after)
    retained = {br.id for br in after.branches}
    return StageRecord(
        stage=stage,
        buses_removed=b0 - b1,
        branches_removed=r0 - r1,
        cycles_removed=c0 - c1,
        eps_disp=dispatch_error(base, sol),
        eps_flow=flow_error(base, sol, retained),
    )


def _electrical_fixed_point(grid: Grid, features: FeatureSet, tau: float) -> tuple[Grid, BusMapping]:
    """Apply the electrical selection until no corridor passes the threshold.

    Merging buses can create new qualifying corridors, so one pass is not
    enough; the loop also stops if a pass removes nothing (feature vetoes).
    """
    g = grid
    mapping = BusMapping.identity(b.id for b in grid.buses)
    while True:
        selected = select_electrical(g, features, tau)
        if not selected:
            return g, mapping
        reduced, step = apply_all(g, selected, features)
        if len(reduced.buses) == len(g.buses):
            return g, mapping
        g = reduced
        mapping = mapping.compose(step)


def run_pipeline(grid: Grid, config: PipelineConfig) -> tuple[Grid, ReductionReport]:
    """Run all three reduction stages and report per-stage counts and errors."""
    report = validate(grid)
    if not report.is_valid:
        msgs = "; ".join(v.message for v in report.violations)
        raise ValueError(f"invalid grid: {msgs}")

    base = _solve_grid(grid, config.tolerance, "reference")
    features = identify(
        grid,
        base,
        loading_threshold=config.loading_threshold,
        length_threshold_km=config.length_threshold_km,
    )

    # stage (i): topological
    small_limit = math.ceil(config.small_fraction * len(grid.buses))
    g1, m1 = apply_all(grid, select_topological(grid, features, small_limit), features)
    sol1 = _solve_grid(g1, config.tolerance, "topology")
    stage1 = _stage_record("topology", grid, g1, base, sol1)

    # stage (ii): electrical coupling with critical-generator refinement,
    # each refinement round rewinding to the post-topology model
    rounds: list[tuple[int, ...]] = []
    g2, m2 = g1, BusMapping.identity(b.id for b in g1.buses)
    sol2 = sol1
    for _ in range(config.max_refinement_rounds):
        g2, m2 = _electrical_fixed_point(g1, features, config.tau)
        sol2 = _solve_grid(g2, config.tolerance, "electrical")
        critical = find_critical_generators(base, sol2, config.critical_limit_mw)
        rounds.append(tuple(sorted(critical)))
        if not critical:
            break
        refined = add_refinement_features(grid, features, critical, config.theta)
        if (
            refined.feature_buses == features.feature_buses
            and refined.feature_branches == features.feature_branches
        ):
            break
        features = refined
    stage2 = _stage_record("electrical", g1, g2, base, sol2)

    # stage (iii): market clustering on the current model's prices
    market_lmps = tuple(sorted((bus_id, price) for bus_id, price in sol2.lmp.items()))
    g3, m3 = apply_all(g2, select_market(g2, features, sol2, config.delta), features)
    sol3 = _solve_grid(g3, config.tolerance, "market")
    stage3 = _stage_record("market", g2, g3, base, sol3)

    mapping = m1.compose(m2).compose(m3)
    b0, r0, c0 = _counts(grid)
    b3, r3, c3 = _counts(g3)
    full_report = ReductionReport(
        grid_name=grid.name,
        config=config,
        initial_buses=b0,
        initial_branches=r0,
        initial_cycles=c0,
        stages=(stage1, stage2, stage3),
        final_buses=b3,
        final_branches=r3,
        final_cycles=c3,
        eps_disp=stage3.eps_disp,
        eps_flow=stage3.eps_flow,
        mapping=mapping,
        critical_generators=tuple(rounds),
        market_lmps=market_lmps,
    )
    return g3, full_report


_SWEEPABLE = ("tau", "delta", "theta")


def sweep(grid: Grid, config: PipelineConfig, parameter: str, values) -> list[SweepRow]:
    """Run the pipeline once per value of one parameter; failures stay in-row."""
    if parameter not in _SWEEPABLE:
        raise ValueError(f"parameter must be one of {_SWEEPABLE}, got {parameter!r}")
    rows: list[SweepRow] = []
    for value in values:
        cfg = replace(config, **{parameter: value})
        try:
            _, report = run_pipeline(grid, cfg)
        except PipelineInfeasibleError as e:
            rows.append(
                SweepRow(
                    value=value,
                    buses_removed=None,
                    branches_removed=None,
                    cycles_removed=None,
                    eps_disp=None,
                    eps_flow=None,
                    status=f"{e.status}_{e.stage}",
                )
            )
            continue
        rows.append(
            SweepRow(
                value=value,
                buses_removed=report.initial_buses - report.final_buses,
                branches_removed=report.initial_branches - report.final_branches,
                cycles_removed=report.initial_cycles - report.final_cycles,
                eps_disp=report.eps_disp,
                eps_flow=report.eps_flow,
            )
        )
    return rows


def verify_scenarios(
    original: Grid,
    reduced: Grid,
    mapping: BusMapping,
    profile: LoadProfile,
    tolerance: float = 1e-6,
) -> list[ScenarioRow]:
    """Re-solve both models across scaled load scenarios and compare errors."""
    mapping.check_consistent()
    original_ids = {b.id for b in original.buses}
    reduced_ids = {b.id for b in reduced.buses}
    if mapping.original_ids != frozenset(original_ids):
        raise ValueError("mapping inconsistent with the original case: bus sets differ")
    if mapping.retained_ids != frozenset(reduced_ids):
        raise ValueError("mapping inconsistent with the reduced case: retained bus sets differ")
    if {g.id for g in original.generators} != {g.id for g in reduced.generators}:
        raise ValueError("generator sets differ between the two cases")
    if {l.id for l in original.loads} != {l.id for l in reduced.loads}:
        raise ValueError("load sets differ between the two cases")

    rows: list[ScenarioRow] = []
    for hour, factor in enumerate(profile.scale_factors, start=1):
        sol_o = solve(build_problem(scale_loads(original, factor)), tolerance)
        sol_r = solve(build_problem(scale_loads(reduced, factor)), tolerance)
        ok_o = sol_o.status == OPTIMAL
        ok_r = sol_r.status == OPTIMAL
        if not ok_o or not ok_r:
            which = "both" if not ok_o and not ok_r else ("original" if not ok_o else "reduced")
            rows.append(ScenarioRow(hour=hour, status=f"infeasible_{which}", eps_disp=None, eps_flow=None))
            continue
        retained = {br.id for br in reduced.branches}
        try:
            e_disp = dispatch_error(sol_o, sol_r)
            e_flow = flow_error(sol_o, sol_r, retained)
        except ValueError:
            rows.append(ScenarioRow(hour=hour, status="degenerate", eps_disp=None, eps_flow=None))
            continue
        rows.append(ScenarioRow(hour=hour, status="ok", eps_disp=e_disp, eps_flow=e_flow))
    return rows
