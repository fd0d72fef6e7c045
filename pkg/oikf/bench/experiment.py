"""Monte Carlo experiments, grid searches and dataset tables.

Every filter of a trial runs on the identical observation sequence. Trials run on worker
threads, each seeded with ``seed_base + trial``; results are aggregated in trial order, so a
report depends only on the spec.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import cast

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from oikf.bench.metrics import MetricReport, MetricRow, TrialStats, aggregate
from oikf.bench.progress import ProgressReporter
from oikf.bench.spec import ExperimentSpec, SweepAxis
from oikf.core import FloatArray, LinearGaussianModel
from oikf.core.diagnostics import BoolArray
from oikf.data import DatasetSchema, TrajectoryDataset, load_csv
from oikf.exceptions import DatasetError
from oikf.filters import initial_belief, make_step, run_filter
from oikf.filters.runner import FilterKind, FilterRun
from oikf.scenario import (
    POSITION_INDEX,
    WnaSpec,
    db_to_linear,
    generate,
    linear_to_db,
    wna_model,
    wna_position_model,
)

__all__ = [
    "GridResult",
    "run_experiment",
    "grid_search",
    "dataset_table",
    "estimate_trajectory",
    "load_dataset",
]

# Injected outliers larger than this many nominal standard deviations count towards recall.
LARGE_OUTLIER_SIGMAS = 3.0

PARTIAL_METRICS_FILE = "partial_metrics.csv"


@dataclass(frozen=True)
class _Sequence:
    """One filtering problem: observations, truth, and the model the filters assume."""

    model: LinearGaussianModel
    observations: FloatArray
    truth_positions: FloatArray
    truth_states: FloatArray | None = None
    outlier_mask: BoolArray | None = None
    outlier_values: FloatArray | None = None
    nominal_std: FloatArray | None = None


@dataclass(frozen=True)
class _Point:
    """Assumed filter parameters at one sweep or grid point."""

    sweep_axis: str
    sweep_db: float
    r_sq: float
    q_sq: float
    label: str = "sweep"


Workload = Callable[[int, _Point], list[_Sequence]]


class GridResult(BaseModel):
    """Outcome of a grid search: the best grid value per filter and the full report."""

    param: str = Field(description="Searched parameter (r_sq or q_sq)")
    best_db: dict[str, float] = Field(description="Best grid value per filter, dB")
    best_value: dict[str, float] = Field(description="Best grid value per filter, linear")
    report: MetricReport = Field(description="One row per (grid point, filter)")

    model_config = ConfigDict(frozen=True)


def _base_model(spec: ExperimentSpec) -> LinearGaussianModel:
    return spec.model if spec.model is not None else wna_model(spec.wna)


def _base_q_sq(spec: ExperimentSpec) -> float:
    # An explicit model's Q is taken as unit intensity.
    return 1.0 if spec.model is not None else spec.wna.q_sq


def _with_point(
    model: LinearGaussianModel, point: _Point, base_q_sq: float
) -> LinearGaussianModel:
    return model.with_noise(q_scale=point.q_sq / base_q_sq, r_sq=point.r_sq)


def _position_estimate(model: LinearGaussianModel, observations: FloatArray) -> FloatArray:
    """Back-projected position of every raw observation (the ``raw`` reference filter)."""
    return (observations @ np.linalg.pinv(model.H).T)[:, POSITION_INDEX]


def _run_one(
    name: str, sequence: _Sequence, spec: ExperimentSpec
) -> tuple[FloatArray, FilterRun | None]:
    """Estimated positions for steps 1..T-1 and the run record (None for ``raw``)."""
    if name == "raw":
        return _position_estimate(sequence.model, sequence.observations[1:]), None
    first_truth = sequence.truth_states[0] if sequence.truth_states is not None else None
    initial = initial_belief(sequence.model, sequence.observations[0], first_truth, spec.init)
    config = spec.chi2 if name == "chi2" else spec.oikf
    step = make_step(cast(FilterKind, name), config)
    run = run_filter(sequence.model, sequence.observations[1:], initial, step)
    return run.means[:, POSITION_INDEX], run


def _evaluate_trial(
    sequences: Sequence[_Sequence], spec: ExperimentSpec
) -> dict[str, TrialStats]:
    """Run every filter on every sequence of a trial; axes add up per step."""
    results: dict[str, TrialStats] = {}
    for name in spec.filters:
        stats = TrialStats()
        for sequence in sequences:
            positions, run = _run_one(name, sequence, spec)
            errors = positions - sequence.truth_positions[1:]
            stats.sq_error += float(np.sum(errors * errors))
            stats.steps = positions.shape[0]
            if run is None:
                continue
            stats.elapsed += run.elapsed
            stats.iterations += int(run.iterations.sum())
            stats.detections += run.detection_count
            stats.entries += run.detections.size
            if sequence.outlier_mask is not None and sequence.outlier_values is not None:
                mask = sequence.outlier_mask[1:]
                nominal = sequence.nominal_std if sequence.nominal_std is not None else 0.0
                large = np.abs(sequence.outlier_values[1:]) > LARGE_OUTLIER_SIGMAS * nominal
                stats.has_mask = True
                stats.large_outliers += int(large.sum())
                stats.large_detected += int((large & run.detections).sum())
                stats.clean_entries += int((~mask).sum())
                stats.false_alarms += int((~mask & run.detections).sum())
        results[name] = stats
    return results


def _synthetic_workload(spec: ExperimentSpec, *, data_point: _Point | None) -> Workload:
    """Trials simulate the spec's scenario.

    ``data_point=None`` generates data with the evaluated point's parameters (matched
    filters); otherwise data always come from ``data_point`` and only the filters move.
    """
    base = _base_model(spec)
    base_q = _base_q_sq(spec)

    def build(trial: int, point: _Point) -> list[_Sequence]:
        truth_point = data_point or point
        data_model = _with_point(base, truth_point, base_q)
        trajectory = generate(data_model, spec.wna, spec.outliers, spec.seed_base + trial)
        return [
            _Sequence(
                model=data_model if data_point is None else _with_point(base, point, base_q),
                observations=trajectory.observations,
                truth_positions=trajectory.states[:, POSITION_INDEX],
                truth_states=trajectory.states,
                outlier_mask=trajectory.outlier_mask,
                outlier_values=trajectory.outlier_values,
                nominal_std=np.sqrt(data_model.r_sq),
            )
        ]

    return build


def load_dataset(spec: ExperimentSpec) -> TrajectoryDataset:
    """
    Load the spec's dataset, which must carry ground truth.

    Raises:
        DatasetError: If the spec has no dataset/schema or the data has no truth.
    """
    if spec.dataset is None:
        raise DatasetError("experiment has no dataset")
    schema = spec.schema_ or DatasetSchema.standard(1, 1)
    dataset = load_csv(spec.dataset, schema)
    if dataset.truth is None or dataset.truth.shape[1] != dataset.axes:
        logger.error(f"Dataset {spec.dataset} needs one truth column per observation column")
        raise DatasetError(
            "dataset runs need one ground-truth column per observation column",
            path=spec.dataset,
        )
    return dataset


def _dataset_workload(spec: ExperimentSpec, dataset: TrajectoryDataset) -> Workload:
    """Each axis is filtered independently with the single-axis position model."""
    truth = dataset.truth
    assert truth is not None

    def build(_: int, point: _Point) -> list[_Sequence]:
        wna = WnaSpec(
            tau=dataset.sampling_interval, q_sq=point.q_sq, r_sq=point.r_sq, observe="position"
        )
        model = wna_position_model(wna)
        return [
            _Sequence(
                model=model,
                observations=dataset.observations[:, [axis]],
                truth_positions=truth[:, axis],
            )
            for axis in range(dataset.axes)
        ]

    return build


def _evaluate_points(
    spec: ExperimentSpec,
    points: Sequence[_Point],
    workload: Workload,
    trials: int,
    *,
    progress: bool,
    progress_callback: Callable[[int, int], None] | None,
) -> list[MetricRow]:
    rows: list[MetricRow] = []
    reporter = ProgressReporter(
        len(points) * trials, show_bar=progress, callback=progress_callback, desc="Trials"
    )
    try:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            for point in points:
                reporter.start_point(f"{point.label} {point.sweep_axis}={point.sweep_db:g} dB")

                def trial(index: int, point: _Point = point) -> dict[str, TrialStats]:
                    result = _evaluate_trial(workload(index, point), spec)
                    reporter.update()
                    return result

                per_trial = list(pool.map(trial, range(trials)))
                for name in spec.filters:
                    rows.append(
                        aggregate(
                            [result[name] for result in per_trial],
                            filter_name=name,
                            sweep_axis=point.sweep_axis,
                            sweep_db=point.sweep_db,
                            r_sq_db=linear_to_db(point.r_sq),
                            q_sq_db=linear_to_db(point.q_sq),
                            label=point.label,
                        )
                    )
                summary = ", ".join(
                    f"{row.filter} {row.mse_db:.2f} dB" for row in rows[-len(spec.filters) :]
                )
                logger.info(f"{point.label} {point.sweep_axis}={point.sweep_db:g} dB: {summary}")
    except Exception:
        _flush_partial(spec.output_dir, rows)
        raise
    finally:
        reporter.close()
    return rows


def _flush_partial(output_dir: Path, rows: list[MetricRow]) -> None:
    if not rows:
        return
    path = output_dir / PARTIAL_METRICS_FILE
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
        MetricReport(rows=tuple(rows)).to_dataframe(include_timing=False).to_csv(
            path, index=False, float_format="%.17g", lineterminator="\n"
        )
    except OSError as exc:
        logger.error(f"Could not flush partial results to {path}: {exc}")
        return
    logger.warning(f"Run aborted; {len(rows)} completed row(s) written to {path}")


def _point(
    axis: SweepAxis, value_db: float, r_sq: float, q_sq: float, label: str = "sweep"
) -> _Point:
    value = db_to_linear(value_db)
    if axis == "r_sq":
        return _Point(axis, value_db, r_sq=value, q_sq=q_sq, label=label)
    return _Point(axis, value_db, r_sq=r_sq, q_sq=value, label=label)


def run_experiment(
    spec: ExperimentSpec,
    *,
    progress: bool = False,
    progress_callback: Callable[[int, int], None] | None = None,
) -> MetricReport:
    """
    Run every filter over every sweep point and trial and aggregate the position errors.

    Synthetic runs sweep the true parameter with the filters matched to it. Dataset runs
    keep the data fixed and sweep the parameter the filters assume (one pass, ``trials`` is
    ignored since the data are deterministic).

    Args:
        spec: Experiment specification
        progress: Show a tqdm progress bar (optional ``progress`` extra)
        progress_callback: Called with ``(done, total)`` trials

    Returns:
        MetricReport with one row per (sweep point, filter)

    Raises:
        ModelValidationError, FilterError, DatasetError: Propagated after the completed rows
            are flushed to ``partial_metrics.csv`` in ``spec.output_dir``.

    Example:
        >>> spec = ExperimentSpec(sweep_db=(0.0, 10.0), trials=20, seed_base=1)
        >>> report = run_experiment(spec)
        >>> report.to_dataframe()[["filter", "sweep_db", "mse_db"]]
    """
    r_sq, q_sq = spec.wna.r_sq, _base_q_sq(spec)
    points = [_point(spec.sweep_axis, value, r_sq, q_sq) for value in spec.sweep_db]
    logger.info(
        f"Running {len(spec.filters)} filter(s) over {len(points)} {spec.sweep_axis} point(s)"
        f"{'' if spec.is_dataset else f' x {spec.trials} trial(s)'}"
    )
    if spec.is_dataset:
        workload = _dataset_workload(spec, load_dataset(spec))
        trials = 1
    else:
        workload = _synthetic_workload(spec, data_point=None)
        trials = spec.trials
    rows = _evaluate_points(
        spec, points, workload, trials, progress=progress, progress_callback=progress_callback
    )
    return MetricReport(rows=tuple(rows))


def _best(rows: Sequence[MetricRow], filters: Sequence[str]) -> dict[str, MetricRow]:
    """Lowest-MSE row per filter; rows arrive in ascending parameter order so ties keep the
    smaller parameter."""
    best: dict[str, MetricRow] = {}
    for row in rows:
        current = best.get(row.filter)
        if current is None or row.mse < current.mse:
            best[row.filter] = row
    return {name: best[name] for name in filters if name in best}


def grid_search(
    spec: ExperimentSpec,
    param: SweepAxis,
    grid: Sequence[float],
    *,
    progress: bool = False,
) -> GridResult:
    """
    Find, per filter, the assumed ``param`` (dB grid) with the lowest MSE.

    The data stay fixed (the spec's true parameters, or the dataset) while the filters'
    assumed value moves over the grid; every grid point sees the same trials. Ties go to
    the smaller parameter.

    Args:
        spec: Experiment specification (its sweep settings are ignored)
        param: ``"r_sq"`` or ``"q_sq"``
        grid: Candidate values in dB

    Returns:
        GridResult with the best value per filter and a report over the whole grid

    Raises:
        ValueError: If ``grid`` is empty.

    Example:
        >>> result = grid_search(spec, "r_sq", [-5.0, 0.0, 5.0])
        >>> result.best_db["kf"]
        0.0
    """
    if not grid:
        raise ValueError("grid must not be empty")
    ordered = sorted(set(float(value) for value in grid))
    r_sq, q_sq = spec.wna.r_sq, _base_q_sq(spec)
    points = [_point(param, value, r_sq, q_sq, label="grid") for value in ordered]
    if spec.is_dataset:
        workload = _dataset_workload(spec, load_dataset(spec))
        trials = 1
    else:
        truth = _Point(param, 0.0, r_sq=r_sq, q_sq=q_sq)
        workload = _synthetic_workload(spec, data_point=truth)
        trials = spec.trials

    rows = _evaluate_points(
        spec, points, workload, trials, progress=progress, progress_callback=None
    )
    best = _best(rows, spec.filters)
    for name, row in best.items():
        logger.info(f"Grid {param}: {name} best at {row.sweep_db:g} dB ({row.mse_db:.2f} dB)")
    return GridResult(
        param=param,
        best_db={name: row.sweep_db for name, row in best.items()},
        best_value={name: db_to_linear(row.sweep_db) for name, row in best.items()},
        report=MetricReport(rows=tuple(rows)),
    )


def dataset_table(
    spec: ExperimentSpec,
    *,
    fixed_r_sq: float = 9.0,
    r_grid_db: Sequence[float],
    q_grid_db: Sequence[float],
) -> MetricReport:
    """
    Two row groups per filter on a dataset: at a fixed assumed r^2 and at its best (r^2, q^2).

    Both groups grid-search q^2. ``fixed`` rows hold r^2 at ``fixed_r_sq`` and keep each
    filter's best q^2 from ``q_grid_db``; ``optimal`` rows use the pair minimizing the MSE over
    the joint grid. Grids are searched in ascending order so ties keep the smaller values.

    Raises:
        DatasetError: If the spec has no usable dataset.
        ValueError: If a grid is empty.
    """
    if not r_grid_db or not q_grid_db:
        raise ValueError("r and q grids must not be empty")
    dataset = load_dataset(spec)
    workload = _dataset_workload(spec, dataset)
    q_values_db = sorted(set(float(value) for value in q_grid_db))

    fixed_db = linear_to_db(fixed_r_sq)
    fixed_points = [
        _Point("r_sq", fixed_db, r_sq=fixed_r_sq, q_sq=db_to_linear(q_db), label="fixed")
        for q_db in q_values_db
    ]
    fixed_best = _best(
        _evaluate_points(spec, fixed_points, workload, 1, progress=False, progress_callback=None),
        spec.filters,
    )

    grid_points = [
        _Point("r_sq", r_db, r_sq=db_to_linear(r_db), q_sq=db_to_linear(q_db), label="optimal")
        for r_db in sorted(set(float(value) for value in r_grid_db))
        for q_db in q_values_db
    ]
    best = _best(
        _evaluate_points(spec, grid_points, workload, 1, progress=False, progress_callback=None),
        spec.filters,
    )
    rows = [fixed_best[name] for name in spec.filters]
    rows.extend(best[name] for name in spec.filters)
    for name in spec.filters:
        logger.info(
            f"{name}: q2={fixed_best[name].q_sq_db:g} dB at fixed r2={fixed_db:g} dB "
            f"(RMSE {fixed_best[name].rmse:.3f}); optimal r2={best[name].r_sq_db:g} dB, "
            f"q2={best[name].q_sq_db:g} dB (RMSE {best[name].rmse:.3f})"
        )
    return MetricReport(rows=tuple(rows))


def estimate_trajectory(
    spec: ExperimentSpec,
    *,
    r_sq: float | None = None,
    q_sq: float | None = None,
    trial: int = 0,
) -> pd.DataFrame:
    """
    Per-step estimates of every filter on one sequence (data for a trajectory plot).

    Synthetic specs simulate trial ``trial`` at the spec's parameters; dataset specs use
    the dataset. ``r_sq``/``q_sq`` override the values the filters assume.

    Returns:
        DataFrame with ``time``, then per axis k ``observed_k``, ``truth_k`` and one
        ``<filter>_k`` column per filter; the initialising first sample is excluded.
    """
    point = _Point(
        "r_sq",
        0.0,
        r_sq=r_sq if r_sq is not None else spec.wna.r_sq,
        q_sq=q_sq if q_sq is not None else _base_q_sq(spec),
        label="trajectory",
    )
    if spec.is_dataset:
        dataset = load_dataset(spec)
        sequences = _dataset_workload(spec, dataset)(trial, point)
        times = dataset.times[1:]
    else:
        sequences = _synthetic_workload(spec, data_point=None)(trial, point)
        times = np.arange(1, spec.wna.horizon) * spec.wna.tau

    columns: dict[str, FloatArray] = {"time": np.asarray(times)}
    for axis, sequence in enumerate(sequences):
        observed = _position_estimate(sequence.model, sequence.observations[1:])
        columns[f"observed_{axis}"] = observed
        columns[f"truth_{axis}"] = np.asarray(sequence.truth_positions[1:])
        for name in spec.filters:
            if name != "raw":
                columns[f"{name}_{axis}"] = _run_one(name, sequence, spec)[0]
    return pd.DataFrame(columns)

