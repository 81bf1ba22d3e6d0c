"""Feature- and structure-preserving reduction of transmission grid models."""

from .model import (
    Branch,
    Bus,
    Corridor,
    Generator,
    Grid,
    Load,
    ValidationReport,
    Violation,
    connected_components,
    corridor_adjacency,
    corridors,
    cycle_count,
    equivalent_series_impedance,
    scale_loads,
    validate,
)
from .io import (
    AnnotationFormatError,
    Annotations,
    BusMapping,
    CaseFormatError,
    LoadProfile,
    MappingFormatError,
    ProfileFormatError,
    apply_annotations,
    parse_annotations,
    parse_case,
    parse_mapping,
    parse_profile,
    write_case,
    write_features,
    write_mapping,
    write_report,
    write_scenario_table,
    write_selections,
    write_sweep_table,
)
from .dcopf import (
    OpfProblem,
    OpfSolution,
    UnsupportedBranchError,
    build_problem,
    flows_at_limit,
    solve,
)
from .features import FeatureSet, add_refinement_features, identify
from .reduction import (
    Subgrid,
    SubgridError,
    apply_all,
    apply_mapping,
    contains_feature,
    reduce_subgrid,
)
from .selection import (
    SelectionConfig,
    find_critical_generators,
    select_electrical,
    select_market,
    select_topological,
)
from .pipeline import (
    PipelineConfig,
    PipelineInfeasibleError,
    ReductionReport,
    ScenarioRow,
    StageRecord,
    SweepRow,
    dispatch_error,
    flow_error,
    run_pipeline,
    sweep,
    verify_scenarios,
)
from .estimator import GridReducer

__version__ = "0.1.0"

__all__ = [
    "AnnotationFormatError",
    "Annotations",
    "Branch",
    "Bus",
    "BusMapping",
    "CaseFormatError",
    "Corridor",
    "FeatureSet",
    "Generator",
    "Grid",
    "GridReducer",
    "Load",
    "LoadProfile",
    "MappingFormatError",
    "OpfProblem",
    "OpfSolution",
    "PipelineConfig",
    "PipelineInfeasibleError",
    "ProfileFormatError",
    "ReductionReport",
    "ScenarioRow",
    "SelectionConfig",
    "StageRecord",
    "Subgrid",
    "SubgridError",
    "SweepRow",
    "UnsupportedBranchError",
    "ValidationReport",
    "Violation",
    "add_refinement_features",
    "apply_all",
    "apply_annotations",
    "apply_mapping",
    "build_problem",
    "connected_components",
    "contains_feature",
    "corridor_adjacency",
    "corridors",
    "cycle_count",
    "dispatch_error",
    "equivalent_series_impedance",
    "find_critical_generators",
    "flow_error",
    "flows_at_limit",
    "identify",
    "parse_annotations",
    "parse_case",
    "parse_mapping",
    "parse_profile",
    "reduce_subgrid",
    "run_pipeline",
    "scale_loads",
    "select_electrical",
    "select_market",
    "select_topological",
    "solve",
    "sweep",
    "validate",
    "verify_scenarios",
    "write_case",
    "write_features",
    "write_mapping",
    "write_report",
    "write_scenario_table",
    "write_selections",
    "write_sweep_table",
]
