"""Estimator-style wrapper around the reduction pipeline.

GridReducer follows the fit/transform convention: fit runs the full pipeline
on a grid and stores the reduced grid, the bus mapping and the report;
transform replays the learned mapping on a grid with the same bus universe,
which is how load-variant scenarios of the fitted model are reduced without
re-running selection.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .model import Grid
from .pipeline import PipelineConfig, run_pipeline
from .reduction import apply_mapping


class GridReducer(BaseEstimator, TransformerMixin):
    """Learn a bus-aggregation mapping from one grid, apply it to variants.

    Parameters mirror PipelineConfig and are stored untouched so that
    get_params/set_params round-trip.
    """

    def __init__(
        self,
        tau: float = 0.05,
        delta: float = 0.08,
        theta: int = 4,
        critical_limit_mw: float = 10.0,
        small_fraction: float = 0.01,
        loading_threshold: float = 0.95,
        length_threshold_km: float = 50.0,
        max_refinement_rounds: int = 5,
        tolerance: float = 1e-6,
    ):
        self.tau = tau
        self.delta = delta
        self.theta = theta
        self.critical_limit_mw = critical_limit_mw
        self.small_fraction = small_fraction
        self.loading_threshold = loading_threshold
        self.length_threshold_km = length_threshold_km
        self.max_refinement_rounds = max_refinement_rounds
        self.tolerance = tolerance

    def _config(self) -> PipelineConfig:
        return PipelineConfig(
            tau=self.tau,
            delta=self.delta,
            theta=self.theta,
            critical_limit_mw=self.critical_limit_mw,
            small_fraction=self.small_fraction,
            loading_threshold=self.loading_threshold,
            length_threshold_km=self.length_threshold_km,
            max_refinement_rounds=self.max_refinement_rounds,
            tolerance=self.tolerance,
        )

    def fit(self, X: Grid, y=None) -> "GridReducer":
        """Run the reduction pipeline on X and keep its mapping."""
        if not isinstance(X, Grid):
            raise TypeError(f"X must be a Grid, got {type(X).__name__}")
        self.grid_reduced_, self.report_ = run_pipeline(X, self._config())
        self.mapping_ = self.report_.mapping
        self.original_bus_ids_ = frozenset(b.id for b in X.buses)
        return self

    def transform(self, X: Grid) -> Grid:
        """Replay the fitted mapping on a grid with the same bus universe."""
        if not hasattr(self, "mapping_"):
            raise NotFittedError("GridReducer must be fitted before calling transform")
        if not isinstance(X, Grid):
            raise TypeError(f"X must be a Grid, got {type(X).__name__}")
        if frozenset(b.id for b in X.buses) != self.original_bus_ids_:
            raise ValueError("bus set differs from the grid this reducer was fitted on")
        return apply_mapping(X, self.mapping_)
