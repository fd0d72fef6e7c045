"""Report export: metrics CSV, aligned text table, plot data, runtimes and trajectories.

``metrics.csv`` has no wall-clock columns, so re-running a seeded experiment reproduces it
byte for byte; timings go to ``runtime.csv``.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Literal

import pandas as pd
from loguru import logger

from oikf.bench.metrics import MetricReport
from oikf.bench.runtime import RuntimeResult
from oikf.exceptions import ExportError

__all__ = [
    "ExportFormat",
    "EXPORT_FORMATS",
    "export",
    "export_runtimes",
    "export_trajectory",
    "render_table",
]

ExportFormat = Literal["csv", "table", "plotdata"]
EXPORT_FORMATS: tuple[ExportFormat, ...] = ("csv", "table", "plotdata")

METRICS_FILE = "metrics.csv"
RUNTIME_FILE = "runtime.csv"
TABLE_FILE = "table.txt"

_FLOAT_FORMAT = "%.17g"

_TABLE_COLUMNS = {
    "filter": "Filter",
    "label": "Setting",
    "r_sq_db": "r2 [dB]",
    "q_sq_db": "q2 [dB]",
    "rmse": "RMSE",
    "mse_db": "MSE [dB]",
    "step_time_ms": "Runtime [ms]",
}


def _write_csv(frame: pd.DataFrame, path: Path) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=_FLOAT_FORMAT, lineterminator="\n")
    except OSError as exc:
        logger.error(f"Failed to write {path}: {exc}")
        raise ExportError(f"Failed to write {path}: {exc}") from exc
    logger.info(f"Wrote {path}")
    return path


def _write_text(text: str, path: Path) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        logger.error(f"Failed to write {path}: {exc}")
        raise ExportError(f"Failed to write {path}: {exc}") from exc
    logger.info(f"Wrote {path}")
    return path


def render_table(report: MetricReport) -> str:
    """
    Aligned plain-text table with the position-error columns (RMSE, MSE dB, runtime).

    Example:
        >>> print(render_table(report))  # doctest: +SKIP
         Filter Setting r2 [dB] q2 [dB]    RMSE MSE [dB] Runtime [ms]
             kf   sweep    0.00  -10.00  0.8132   -1.797       0.0312
    """
    frame = report.to_dataframe()[list(_TABLE_COLUMNS)].rename(columns=_TABLE_COLUMNS)
    formatters = {
        "r2 [dB]": "{:.2f}".format,
        "q2 [dB]": "{:.2f}".format,
        "RMSE": "{:.4f}".format,
        "MSE [dB]": "{:.3f}".format,
        "Runtime [ms]": "{:.4f}".format,
    }
    return str(frame.to_string(index=False, formatters=formatters)) + "\n"


def _plot_name(filter_name: str, label: str) -> str:
    suffix = "" if label == "sweep" else f"_{label}"
    return f"plot_{filter_name}{suffix}.csv"


def export(
    report: MetricReport,
    formats: Iterable[ExportFormat],
    output_dir: str | Path,
) -> list[Path]:
    """
    Write ``report`` in each requested format under ``output_dir``.

    - ``csv``: ``metrics.csv`` (one row per (filter, point), no timings) and
      ``runtime.csv`` (per-step wall time per row)
    - ``table``: ``table.txt``, aligned columns as in a results table
    - ``plotdata``: ``plot_<filter>.csv`` per filter with x = sweep dB, y = MSE dB

    Returns:
        Paths written, in format order

    Raises:
        ValueError: If the report is empty or a format is unknown.
        ExportError: If a file cannot be written.
    """
    if not report.rows:
        raise ValueError("cannot export an empty report")
    output_dir = Path(output_dir)
    frame = report.to_dataframe()
    written: list[Path] = []
    for fmt in formats:
        if fmt == "csv":
            written.append(
                _write_csv(report.to_dataframe(include_timing=False), output_dir / METRICS_FILE)
            )
            timing = frame[["filter", "label", "sweep_axis", "sweep_db", "step_time_ms"]]
            written.append(_write_csv(timing, output_dir / RUNTIME_FILE))
        elif fmt == "table":
            written.append(_write_text(render_table(report), output_dir / TABLE_FILE))
        elif fmt == "plotdata":
            for (name, label), group in frame.groupby(["filter", "label"], sort=False):
                points = group[["sweep_db", "mse_db", "ci_half_width"]].rename(
                    columns={"sweep_db": "x_db", "mse_db": "y_mse_db"}
                )
                written.append(_write_csv(points, output_dir / _plot_name(str(name), str(label))))
        else:
            raise ValueError(f"Unknown export format {fmt!r}; expected one of {EXPORT_FORMATS}")
    return written


def export_runtimes(results: Sequence[RuntimeResult], output_dir: str | Path) -> Path:
    """
    Write ``runtime.csv`` for a runtime measurement (one row per filter).

    Raises:
        ValueError: If ``results`` is empty.
        ExportError: If the file cannot be written.
    """
    if not results:
        raise ValueError("no runtime results to export")
    frame = pd.DataFrame(
        [
            {
                "filter": item.filter,
                "steps": item.steps,
                "repetitions": item.repetitions,
                "step_time_ms": item.per_step_ms,
                "mean_iterations": item.mean_iterations,
            }
            for item in results
        ]
    )
    return _write_csv(frame, Path(output_dir) / RUNTIME_FILE)


def export_trajectory(frame: pd.DataFrame, path: str | Path) -> Path:
    """Write per-step trajectory estimates (see ``estimate_trajectory``)."""
    return _write_csv(frame, Path(path))
