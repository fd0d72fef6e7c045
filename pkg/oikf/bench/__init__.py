"""Benchmark harness: Monte Carlo sweeps, grid search, runtime and report export."""

from oikf.bench.experiment import (
    GridResult,
    dataset_table,
    estimate_trajectory,
    grid_search,
    load_dataset,
    run_experiment,
)
from oikf.bench.export import EXPORT_FORMATS, export, export_runtimes, export_trajectory
from oikf.bench.metrics import MetricReport, MetricRow, TrialStats, aggregate
from oikf.bench.progress import ProgressReporter
from oikf.bench.runtime import RuntimeResult, measure_runtime, measure_runtimes
from oikf.bench.spec import BENCH_FILTERS, BenchFilter, ExperimentSpec, load_experiment

__all__ = [
    "BENCH_FILTERS",
    "EXPORT_FORMATS",
    "BenchFilter",
    "ExperimentSpec",
    "GridResult",
    "MetricReport",
    "MetricRow",
    "ProgressReporter",
    "RuntimeResult",
    "TrialStats",
    "aggregate",
    "dataset_table",
    "estimate_trajectory",
    "export",
    "export_runtimes",
    "export_trajectory",
    "grid_search",
    "load_dataset",
    "load_experiment",
    "measure_runtime",
    "measure_runtimes",
    "run_experiment",
]
