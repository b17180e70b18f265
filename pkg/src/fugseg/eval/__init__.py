"""Metrics, benchmarking, parameter search and synthetic scenes."""
from .benchmark import BenchmarkReport, StageTiming, benchmark_runtime
from .gridsearch import grid_search, gridsearch_table, default_param_grid
from .metrics import (
    ConfusionCounts,
    MetricReport,
    aggregate_metrics,
    compute_metrics,
    report_from_counts,
    report_table,
)
from .synth import SceneSpec, SyntheticScene, scene_preset, scene_sensor, synth_scene

__all__ = [
    "BenchmarkReport",
    "ConfusionCounts",
    "MetricReport",
    "SceneSpec",
    "StageTiming",
    "SyntheticScene",
    "aggregate_metrics",
    "benchmark_runtime",
    "compute_metrics",
    "grid_search",
    "gridsearch_table",
    "default_param_grid",
    "report_from_counts",
    "report_table",
    "scene_preset",
    "scene_sensor",
    "synth_scene",
]
