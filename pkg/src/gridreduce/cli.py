"""Command-line interface.

Subcommands: opf, features, reduce, sweep, verify. Every command reads case
files, writes deterministic CSV or text outputs into --out-dir, and exits
with 0 on success, 2 on usage errors, 3 on unparsable inputs, 4 when an OPF
is infeasible, and 5 on internal errors.
"""

from __future__ import annotations

import logging
import sys
from pathlib import Path

import click

from . import io as gio
from .dcopf import OPTIMAL, build_problem, solve
from .features import identify
from .model import Grid
from .pipeline import (
    PipelineConfig,
    PipelineInfeasibleError,
    run_pipeline,
    sweep as run_sweep,
    verify_scenarios,
)

EXIT_PARSE = 3
EXIT_INFEASIBLE = 4
EXIT_INTERNAL = 5

_PARSE_ERRORS = (
    gio.CaseFormatError,
    gio.ProfileFormatError,
    gio.AnnotationFormatError,
    gio.MappingFormatError,
)


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _run(action):
    try:
        action()
    except _PARSE_ERRORS as e:
        _fail(EXIT_PARSE, str(e))
    except PipelineInfeasibleError as e:
        _fail(EXIT_INFEASIBLE, str(e))
    except Exception as e:
        _fail(EXIT_INTERNAL, str(e))


def _read_case(case_path: str, annotations: tuple[str, ...]) -> Grid:
    grid = gio.parse_case(Path(case_path).read_text())
    for ann_path in annotations:
        grid = gio.apply_annotations(grid, gio.parse_annotations(Path(ann_path).read_text()))
    return grid


def _write(out_dir: str, name: str, content: str) -> Path:
    directory = Path(out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / name
    path.write_text(content)
    return path


def _fraction(name: str, low_open: bool = False):
    def check(ctx, param, value):
        if value is None:
            return value
        if value < 0 or value > 1 or (low_open and value == 0):
            bound = "(0, 1]" if low_open else "[0, 1]"
            raise click.BadParameter(f"{name} must be in {bound}")
        return value

    return check


def _positive(name: str):
    def check(ctx, param, value):
        if value is not None and value <= 0:
            raise click.BadParameter(f"{name} must be positive")
        return value

    return check


def _nonnegative(name: str):
    def check(ctx, param, value):
        if value is not None and value < 0:
            raise click.BadParameter(f"{name} must be nonnegative")
        return value

    return check


_CONFIG_OPTIONS = [
    click.option("--tau", type=float, default=0.05, show_default=True, callback=_fraction("tau"), help="Electrical-coupling impedance threshold fraction."),
    click.option("--delta", type=float, default=0.08, show_default=True, callback=_positive("delta"), help="Market clustering price threshold (currency/MWh)."),
    click.option("--theta", type=int, default=4, show_default=True, callback=_nonnegative("theta"), help="Refinement search depth in corridor hops."),
    click.option("--critical-limit-mw", type=float, default=10.0, show_default=True, callback=_nonnegative("critical-limit-mw"), help="Dispatch deviation that marks a generator critical."),
    click.option("--small-fraction", type=float, default=0.01, show_default=True, callback=_fraction("small-fraction", low_open=True), help="Bus-count fraction that counts as a small subgrid."),
    click.option("--loading-threshold", type=float, default=0.95, show_default=True, callback=_nonnegative("loading-threshold"), help="Loading fraction that marks a branch congested."),
    click.option("--length-km", type=float, default=50.0, show_default=True, callback=_nonnegative("length-km"), help="Length at or above which a line is a feature."),
    click.option("--max-refinement-rounds", type=int, default=5, show_default=True, callback=_positive("max-refinement-rounds"), help="Cap on refinement rounds."),
    click.option("--tolerance", type=float, default=1e-6, show_default=True, callback=_positive("tolerance"), help="LP feasibility tolerance."),
    click.option("--annotations", multiple=True, type=click.Path(exists=True, dir_okay=False), help="Sidecar CSV (branch lengths or generator classes); repeatable."),
    click.option("--seed-order", type=click.Choice(["id-ascending"]), default="id-ascending", show_default=True, help="Iteration order for candidate seeds; fixed for determinism."),
    click.option("--out-dir", type=click.Path(file_okay=False), default=".", show_default=True, help="Directory for output files."),
]


def _with_config_options(f):
    for option in reversed(_CONFIG_OPTIONS):
        f = option(f)
    return f


def _config_from_flags(flags) -> PipelineConfig:
    return PipelineConfig(
        tau=flags["tau"],
        delta=flags["delta"],
        theta=flags["theta"],
        critical_limit_mw=flags["critical_limit_mw"],
        small_fraction=flags["small_fraction"],
        loading_threshold=flags["loading_threshold"],
        length_threshold_km=flags["length_km"],
        max_refinement_rounds=flags["max_refinement_rounds"],
        tolerance=flags["tolerance"],
    )


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log parser warnings and progress.")
def main(verbose: bool):
    """Feature-preserving reduction of transmission grid models."""
    logging.basicConfig(level=logging.INFO if verbose else logging.ERROR, format="%(levelname)s %(message)s")


@main.command("opf")
@click.argument("case_path", type=click.Path(exists=True, dir_okay=False))
@_with_config_options
def cmd_opf(case_path, **flags):
    """Solve the DC optimal power flow and write dispatch, flows and prices."""

    def action():
        grid = _read_case(case_path, flags["annotations"])
        solution = solve(build_problem(grid), flags["tolerance"])
        if solution.status != OPTIMAL:
            raise PipelineInfeasibleError("opf", solution.status)
        out = flags["out_dir"]
        dispatch = ["generator,dispatch_mw"]
        dispatch += [f"g{gid},{value!r}" for gid, value in sorted(solution.dispatch.items())]
        _write(out, "dispatch.csv", "\n".join(dispatch) + "\n")
        flows = ["branch,flow_mw"]
        flows += [f"k{bid},{value!r}" for bid, value in sorted(solution.flow.items())]
        _write(out, "flows.csv", "\n".join(flows) + "\n")
        lmps = ["bus,lmp"]
        lmps += [f"n{bid},{value!r}" for bid, value in sorted(solution.lmp.items())]
        _write(out, "lmps.csv", "\n".join(lmps) + "\n")
        click.echo(f"objective: {solution.objective!r}")

    _run(action)


@main.command("features")
@click.argument("case_path", type=click.Path(exists=True, dir_okay=False))
@_with_config_options
def cmd_features(case_path, **flags):
    """Identify feature buses and branches and write them as CSV."""

    def action():
        grid = _read_case(case_path, flags["annotations"])
        solution = solve(build_problem(grid), flags["tolerance"])
        if solution.status != OPTIMAL:
            raise PipelineInfeasibleError("reference", solution.status)
        feats = identify(
            grid,
            solution,
            loading_threshold=flags["loading_threshold"],
            length_threshold_km=flags["length_km"],
        )
        path = _write(flags["out_dir"], "features.csv", gio.write_features(feats))
        click.echo(f"wrote {path}")

    _run(action)


@main.command("reduce")
@click.argument("case_path", type=click.Path(exists=True, dir_okay=False))
@_with_config_options
def cmd_reduce(case_path, **flags):
    """Run the full reduction pipeline; write the reduced case, the bus
    mapping and the report."""

    def action():
        grid = _read_case(case_path, flags["annotations"])
        reduced, report = run_pipeline(grid, _config_from_flags(flags))
        out = flags["out_dir"]
        _write(out, "reduced_case.json", gio.write_case(reduced))
        _write(out, "mapping.csv", gio.write_mapping(report.mapping))
        path = _write(out, "report.txt", gio.write_report(report))
        removed = report.initial_buses - report.final_buses
        share = removed / report.initial_buses if report.initial_buses else 0.0
        click.echo(f"buses {report.initial_buses} -> {report.final_buses} ({share:.1%} removed)")
        click.echo(f"eps_disp {report.eps_disp!r} eps_flow {report.eps_flow!r}")
        click.echo(f"wrote {path}")

    _run(action)


@main.command("sweep")
@click.argument("case_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--param", type=click.Choice(["tau", "delta", "theta"]), required=True, help="Parameter to vary.")
@click.option("--values", required=True, help="Comma-separated parameter values.")
@_with_config_options
def cmd_sweep(case_path, param, values, **flags):
    """Run the pipeline once per parameter value and write a sweep table."""

    def parse_values():
        out = []
        for piece in values.split(","):
            piece = piece.strip()
            if not piece:
                continue
            try:
                out.append(int(piece) if param == "theta" else float(piece))
            except ValueError:
                raise click.BadParameter(f"bad {param} value {piece!r}", param_hint="--values")
        if not out:
            raise click.BadParameter("no values given", param_hint="--values")
        for v in out:
            if param == "tau" and not 0 <= v <= 1:
                raise click.BadParameter(f"tau value {v} outside [0, 1]", param_hint="--values")
            if param == "delta" and v <= 0:
                raise click.BadParameter(f"delta value {v} must be positive", param_hint="--values")
            if param == "theta" and v < 0:
                raise click.BadParameter(f"theta value {v} must be nonnegative", param_hint="--values")
        return out

    parsed = parse_values()

    def action():
        grid = _read_case(case_path, flags["annotations"])
        rows = run_sweep(grid, _config_from_flags(flags), param, parsed)
        path = _write(flags["out_dir"], "sweep.csv", gio.write_sweep_table(rows))
        click.echo(f"wrote {path}")

    _run(action)


@main.command("verify")
@click.argument("original_case", type=click.Path(exists=True, dir_okay=False))
@click.argument("reduced_case", type=click.Path(exists=True, dir_okay=False))
@click.argument("mapping_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("profile_path", type=click.Path(exists=True, dir_okay=False))
@_with_config_options
def cmd_verify(original_case, reduced_case, mapping_path, profile_path, **flags):
    """Compare the two models across the scenario profile, one row per hour."""

    def action():
        original = _read_case(original_case, flags["annotations"])
        reduced = _read_case(reduced_case, ())
        mapping = gio.parse_mapping(Path(mapping_path).read_text())
        profile = gio.parse_profile(Path(profile_path).read_text())
        rows = verify_scenarios(original, reduced, mapping, profile, tolerance=flags["tolerance"])
        path = _write(flags["out_dir"], "scenarios.csv", gio.write_scenario_table(rows))
        click.echo(f"wrote {path}")

    _run(action)


if __name__ == "__main__":
    main()
