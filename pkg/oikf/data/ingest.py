"""Trajectory datasets: CSV loading, ground-truth alignment, and CSV export.

CSV layout: UTF-8, comma separated, one header row naming the columns, decimal floats. The
default column names written by :func:`export_csv` are ``time``, ``y0..y{n-1}`` for the
observations and ``x0..x{m-1}`` for the ground truth.

Malformed rows (too many fields, non-numeric or missing cells in a used column) are dropped
and counted rather than aborting the load.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from oikf.core import FloatArray, as_readonly
from oikf.exceptions import (
    DatasetError,
    DatasetParseError,
    EmptyDatasetError,
    ExportError,
    NonMonotonicTimeError,
    OutOfRangeError,
)
from oikf.scenario import Trajectory
from oikf.utils.parsing import load_toml, section, validate_or_raise

__all__ = [
    "DatasetSchema",
    "TrajectoryDataset",
    "load_csv",
    "align_ground_truth",
    "export_csv",
]

# Relative spread of sampling intervals below which a timeline already counts as uniform.
_UNIFORM_TOLERANCE = 1e-9
_FLOAT_FORMAT = "%.17g"


class DatasetSchema(BaseModel):
    """Column layout of a trajectory CSV.

    ``scale`` and ``offset`` describe a fixed linear mapping ``scale * value + offset``
    applied to observation and truth columns (e.g. degrees to local metres). ``truth_file``
    points at a separate ground-truth CSV sampled on its own timeline; its truth columns are
    interpolated onto the observation times.
    """

    time_column: str = Field(default="time", description="Timestamp column")
    observation_columns: tuple[str, ...] = Field(
        min_length=1, description="Observed position columns, one per axis"
    )
    truth_columns: tuple[str, ...] = Field(
        default=(), description="Ground-truth position columns, same order as the observations"
    )
    truth_file: Path | None = Field(default=None, description="Separate ground-truth CSV")
    truth_time_column: str | None = Field(
        default=None, description="Timestamp column of truth_file (default: time_column)"
    )
    units: str = Field(default="m", description="Units of the mapped position columns")
    scale: float = Field(default=1.0, gt=0.0, description="Linear mapping scale")
    offset: float = Field(default=0.0, description="Linear mapping offset")
    resample: bool = Field(default=True, description="Resample to the median interval")

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_truth(self) -> DatasetSchema:
        if self.truth_file is not None and not self.truth_columns:
            raise ValueError("truth_file requires truth_columns")
        return self

    @classmethod
    def standard(cls, n_observations: int, n_truth: int = 0) -> DatasetSchema:
        """Schema of the files written by :func:`export_csv`."""
        return cls(
            observation_columns=tuple(f"y{k}" for k in range(n_observations)),
            truth_columns=tuple(f"x{k}" for k in range(n_truth)),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> DatasetSchema:
        """
        Load a schema from the ``[dataset]`` table of a TOML sidecar.

        Relative ``truth_file`` paths resolve against the sidecar's directory.

        Example:
            >>> schema = DatasetSchema.from_file("gps_run.toml")

        Raises:
            ConfigError: If the file cannot be read or decoded.
            pydantic.ValidationError: If the table does not describe a valid schema.
        """
        path = Path(path)
        table = dict(section(load_toml(path), "dataset", context=str(path)))
        truth_file = table.get("truth_file")
        if isinstance(truth_file, str) and not Path(truth_file).is_absolute():
            table["truth_file"] = path.parent / truth_file
        return validate_or_raise(cls, table, context=f"{path} [dataset]")


class TrajectoryDataset(BaseModel):
    """Uniformly sampled observations with optional aligned ground truth."""

    times: FloatArray = Field(description="Sample times (T)")
    observations: FloatArray = Field(description="Observed positions (T x n)")
    truth: FloatArray | None = Field(default=None, description="True positions (T x n)")
    dropped_rows: int = Field(default=0, ge=0, description="Malformed rows skipped")
    sampling_interval: float = Field(gt=0.0, description="Uniform sampling interval")
    source: Path | None = Field(default=None, description="File the data came from")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("times", mode="before")
    @classmethod
    def _coerce_times(cls, value: Any) -> FloatArray:
        return as_readonly(value, ndim=1)

    @field_validator("observations", "truth", mode="before")
    @classmethod
    def _coerce_matrix(cls, value: Any) -> FloatArray | None:
        if value is None:
            return None
        return as_readonly(value, ndim=2)

    @model_validator(mode="after")
    def _check_shapes(self) -> TrajectoryDataset:
        steps = self.times.shape[0]
        if self.observations.shape[0] != steps:
            raise ValueError("observations and times have different lengths")
        if self.truth is not None and self.truth.shape[0] != steps:
            raise ValueError("truth and times have different lengths")
        return self

    @property
    def steps(self) -> int:
        """Number of samples T."""
        return int(self.times.shape[0])

    @property
    def axes(self) -> int:
        """Number of observed axes n."""
        return int(self.observations.shape[1])


def _read_table(path: Path, required: list[str]) -> tuple[pd.DataFrame, int]:
    """Read ``path`` as strings, returning the numeric ``required`` columns and the drop count."""
    malformed = 0

    def skip_line(_: list[str]) -> None:
        nonlocal malformed
        malformed += 1
        return None

    try:
        frame = pd.read_csv(
            path,
            engine="python",
            dtype=str,
            encoding="utf-8",
            skip_blank_lines=True,
            on_bad_lines=skip_line,
        )
    except pd.errors.EmptyDataError as exc:
        logger.error(f"Dataset {path} is empty")
        raise EmptyDatasetError(f"Dataset {path} has no header or rows", path=path) from exc
    except pd.errors.ParserError as exc:
        logger.error(f"Failed to parse dataset {path}: {exc}")
        raise DatasetParseError(f"Failed to parse dataset {path}: {exc}", path=path) from exc
    except (OSError, UnicodeDecodeError) as exc:
        logger.error(f"Cannot read dataset {path}: {exc}")
        raise DatasetError(f"Cannot read dataset {path}: {exc}", path=path) from exc

    frame.columns = [str(column).strip() for column in frame.columns]
    for column in required:
        if column not in frame.columns:
            logger.error(f"Dataset {path} has no column '{column}'")
            raise DatasetParseError(
                f"Dataset {path} has no column '{column}' (header: {list(frame.columns)})",
                path=path,
                row=0,
                column=column,
            )

    numeric = frame[required].apply(pd.to_numeric, errors="coerce")
    usable = np.isfinite(numeric.to_numpy(dtype=np.float64)).all(axis=1)
    gaps = int((~usable).sum())
    if gaps:
        first = int(np.flatnonzero(~usable)[0]) + 1
        logger.warning(f"Dropping {gaps} row(s) with missing/non-numeric cells in {path}")
        logger.debug(f"First dropped data row in {path}: {first}")
    return numeric[usable].reset_index(drop=True), malformed + gaps


def _check_monotonic(times: FloatArray, path: Path) -> None:
    steps = np.diff(times)
    if np.any(steps <= 0.0):
        row = int(np.flatnonzero(steps <= 0.0)[0]) + 2
        logger.error(f"Timestamps in {path} are not strictly increasing at data row {row}")
        raise NonMonotonicTimeError(
            f"Timestamps in {path} are not strictly increasing (data row {row})", path=path
        )


def _resample(times: FloatArray) -> tuple[FloatArray, FloatArray, float]:
    """Median interval, uniform grid and nearest-sample row indices for ``times``."""
    intervals = np.diff(times)
    interval = float(np.median(intervals))
    if np.max(np.abs(intervals - interval)) <= _UNIFORM_TOLERANCE * interval:
        return times, np.arange(times.shape[0]), interval
    count = int(np.floor((times[-1] - times[0]) / interval + _UNIFORM_TOLERANCE)) + 1
    grid = times[0] + interval * np.arange(count)
    right = np.clip(np.searchsorted(times, grid), 1, times.shape[0] - 1)
    left = right - 1
    nearest = np.where(grid - times[left] <= times[right] - grid, left, right)
    return grid, nearest, interval


def align_ground_truth(
    observation_times: FloatArray, truth_times: FloatArray, truth_states: FloatArray
) -> FloatArray:
    """
    Linearly interpolate ground truth onto the observation timestamps, per column.

    Args:
        observation_times: Timestamps to evaluate at (T)
        truth_times: Strictly increasing truth timestamps (K)
        truth_states: Truth values (K, or K x d)

    Returns:
        Interpolated truth (T x d)

    Raises:
        OutOfRangeError: If an observation time lies outside [truth_times[0], truth_times[-1]].

    Example:
        >>> align_ground_truth(np.array([1.0]), np.array([0.0, 2.0]), np.array([0.0, 4.0]))
        array([[2.]])
    """
    obs_times = np.asarray(observation_times, dtype=np.float64)
    knots = np.asarray(truth_times, dtype=np.float64)
    values = np.asarray(truth_states, dtype=np.float64)
    if values.ndim == 1:
        values = values[:, np.newaxis]
    if knots.size == 0 or values.shape[0] != knots.shape[0]:
        logger.error(f"Ground truth has {values.shape[0]} rows for {knots.shape[0]} timestamps")
        raise DatasetError(
            f"truth has {values.shape[0]} rows for {knots.shape[0]} timestamps"
        )
    outside = (obs_times < knots[0]) | (obs_times > knots[-1])
    if np.any(outside):
        first = float(obs_times[np.flatnonzero(outside)[0]])
        logger.error(f"Observation time {first} outside truth coverage [{knots[0]}, {knots[-1]}]")
        raise OutOfRangeError(
            f"Observation time {first} lies outside the ground-truth coverage "
            f"[{knots[0]}, {knots[-1]}]"
        )
    return np.column_stack(
        [np.interp(obs_times, knots, values[:, k]) for k in range(values.shape[1])]
    )


def load_csv(path: str | Path, schema: DatasetSchema) -> TrajectoryDataset:
    """
    Load a trajectory CSV into a uniformly sampled dataset.

    Rows with too many fields or with missing/non-numeric cells in the used columns are
    dropped and counted. The remaining timestamps must be strictly increasing. Unless the
    timeline is already uniform, it is resampled to the median interval by picking the
    nearest sample (observations are never interpolated).

    Args:
        path: CSV file
        schema: Column layout

    Returns:
        TrajectoryDataset with ``dropped_rows`` set

    Raises:
        DatasetParseError: If the file cannot be parsed or a column is missing (row 0).
        EmptyDatasetError: If no usable row remains.
        NonMonotonicTimeError: If timestamps are not strictly increasing.
        OutOfRangeError: If a separate truth file does not cover the observations.

    Example:
        >>> dataset = load_csv("gps.csv", DatasetSchema(observation_columns=("east", "north")))
        >>> dataset.dropped_rows
        0
    """
    path = Path(path)
    inline_truth = list(schema.truth_columns) if schema.truth_file is None else []
    required = [schema.time_column, *schema.observation_columns, *inline_truth]
    table, dropped = _read_table(path, required)
    if table.empty:
        logger.error(f"No usable rows in {path} ({dropped} dropped)")
        raise EmptyDatasetError(f"No usable rows in {path} ({dropped} dropped)", path=path)

    times = table[schema.time_column].to_numpy(dtype=np.float64)
    _check_monotonic(times, path)
    observations = table[list(schema.observation_columns)].to_numpy(dtype=np.float64)
    truth = table[inline_truth].to_numpy(dtype=np.float64) if inline_truth else None

    if schema.resample and times.shape[0] > 1:
        grid, rows, interval = _resample(times)
        times, observations = grid, observations[rows]
        truth = truth[rows] if truth is not None else None
    else:
        interval = float(np.median(np.diff(times))) if times.shape[0] > 1 else 1.0

    if schema.truth_file is not None:
        truth_time = schema.truth_time_column or schema.time_column
        truth_table, _ = _read_table(schema.truth_file, [truth_time, *schema.truth_columns])
        if truth_table.empty:
            logger.error(f"No usable rows in truth file {schema.truth_file}")
            raise EmptyDatasetError(
                f"No usable rows in {schema.truth_file}", path=schema.truth_file
            )
        truth_times = truth_table[truth_time].to_numpy(dtype=np.float64)
        _check_monotonic(truth_times, schema.truth_file)
        truth = align_ground_truth(
            times, truth_times, truth_table[list(schema.truth_columns)].to_numpy(np.float64)
        )

    observations = schema.scale * observations + schema.offset
    if truth is not None:
        truth = schema.scale * truth + schema.offset

    logger.info(
        f"Loaded {path}: {times.shape[0]} steps x {observations.shape[1]} axes, "
        f"interval {interval:g}, dropped {dropped} row(s)"
    )
    return TrajectoryDataset(
        times=times,
        observations=observations,
        truth=truth,
        dropped_rows=dropped,
        sampling_interval=interval,
        source=path,
    )


def export_csv(data: Trajectory | TrajectoryDataset, path: str | Path) -> Path:
    """
    Write a trajectory or dataset in the standard CSV layout (17 significant digits).

    Args:
        data: Simulated trajectory (truth = full states) or loaded dataset
        path: Destination file; parent directories are created

    Returns:
        The written path

    Raises:
        ExportError: If the file cannot be written.
    """
    path = Path(path)
    truth = data.states if isinstance(data, Trajectory) else data.truth
    columns: dict[str, FloatArray] = {"time": np.asarray(data.times)}
    for k in range(data.observations.shape[1]):
        columns[f"y{k}"] = data.observations[:, k]
    if truth is not None:
        for k in range(truth.shape[1]):
            columns[f"x{k}"] = truth[:, k]
    frame = pd.DataFrame(columns)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=_FLOAT_FORMAT, lineterminator="\n")
    except OSError as exc:
        logger.error(f"Failed to write {path}: {exc}")
        raise ExportError(f"Failed to write {path}: {exc}") from exc
    logger.info(f"Exported {len(frame)} rows to {path}")
    return path
