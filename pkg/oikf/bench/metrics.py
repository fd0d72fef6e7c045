"""Per-trial error statistics and the aggregated metric report."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

__all__ = [
    "CONFIDENCE_Z",
    "TrialStats",
    "MetricRow",
    "MetricReport",
    "aggregate",
    "TIMING_COLUMNS",
]

# Normal quantile for a two-sided 95% interval.
CONFIDENCE_Z = 1.96

TIMING_COLUMNS = ("step_time_ms",)


@dataclass
class TrialStats:
    """Accumulated errors and detections of one filter over one trial."""

    sq_error: float = 0.0
    steps: int = 0
    detections: int = 0
    entries: int = 0
    large_outliers: int = 0
    large_detected: int = 0
    clean_entries: int = 0
    false_alarms: int = 0
    iterations: int = 0
    elapsed: float = 0.0
    has_mask: bool = False

    @property
    def mse(self) -> float:
        return self.sq_error / self.steps if self.steps else math.nan


class MetricRow(BaseModel):
    """One (filter, sweep point) line of a report."""

    filter: str = Field(description="Filter name")
    label: str = Field(default="sweep", description="Row group, e.g. 'fixed' or 'optimal'")
    sweep_axis: str = Field(description="Swept parameter (r_sq or q_sq)")
    sweep_db: float = Field(description="Sweep value in dB")
    r_sq_db: float = Field(description="Observation-noise variance assumed by the filter, dB")
    q_sq_db: float = Field(description="Process-noise intensity assumed by the filter, dB")
    trials: int = Field(ge=1)
    steps: int = Field(ge=0, description="Filtered steps per trial")
    mse: float = Field(description="Mean squared position error")
    mse_db: float = Field(description="10 log10(mse)")
    rmse: float = Field(description="sqrt(mse), position units")
    ci_half_width: float = Field(description="95% half-width of the mse over trials")
    detection_rate: float = Field(description="Fraction of entries flagged as outliers")
    recall: float = Field(description="Detected fraction of injected outliers with |u| > 3r")
    false_alarm_rate: float = Field(description="Flagged fraction of outlier-free entries")
    mean_iterations: float = Field(description="Inner iterations per step")
    step_time_ms: float = Field(description="Mean wall-clock time per step in ms")

    model_config = ConfigDict(frozen=True)


def _ratio(numerator: int, denominator: int) -> float:
    return numerator / denominator if denominator else math.nan


def aggregate(
    stats: Sequence[TrialStats],
    *,
    filter_name: str,
    sweep_axis: str,
    sweep_db: float,
    r_sq_db: float,
    q_sq_db: float,
    label: str = "sweep",
) -> MetricRow:
    """
    Combine per-trial statistics (in trial order) into a report row.

    The MSE is the mean over trials of the per-trial MSE; the confidence half-width is
    ``1.96 * std / sqrt(trials)`` (0 for a single trial).
    """
    per_trial = np.array([item.mse for item in stats], dtype=np.float64)
    mse = float(np.mean(per_trial))
    trials = len(stats)
    spread = float(np.std(per_trial, ddof=1)) if trials > 1 else 0.0
    steps = stats[0].steps if stats else 0
    total_steps = sum(item.steps for item in stats)
    has_mask = any(item.has_mask for item in stats)
    return MetricRow(
        filter=filter_name,
        label=label,
        sweep_axis=sweep_axis,
        sweep_db=sweep_db,
        r_sq_db=r_sq_db,
        q_sq_db=q_sq_db,
        trials=trials,
        steps=steps,
        mse=mse,
        mse_db=10.0 * math.log10(mse) if mse > 0 else -math.inf,
        rmse=math.sqrt(mse),
        ci_half_width=CONFIDENCE_Z * spread / math.sqrt(trials),
        detection_rate=_ratio(sum(s.detections for s in stats), sum(s.entries for s in stats)),
        recall=(
            _ratio(sum(s.large_detected for s in stats), sum(s.large_outliers for s in stats))
            if has_mask
            else math.nan
        ),
        false_alarm_rate=(
            _ratio(sum(s.false_alarms for s in stats), sum(s.clean_entries for s in stats))
            if has_mask
            else math.nan
        ),
        mean_iterations=_ratio(sum(s.iterations for s in stats), total_steps),
        step_time_ms=1e3 * sum(s.elapsed for s in stats) / total_steps if total_steps else 0.0,
    )


class MetricReport(BaseModel):
    """Rows of one experiment, in (sweep point, filter) order."""

    rows: tuple[MetricRow, ...] = Field(description="Report rows")

    model_config = ConfigDict(frozen=True)

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def filters(self) -> list[str]:
        """Filters in first-seen order."""
        return list(dict.fromkeys(row.filter for row in self.rows))

    def to_dataframe(self, *, include_timing: bool = True) -> pd.DataFrame:
        """
        Convert the report to a DataFrame, one row per report row.

        Args:
            include_timing: Keep the wall-clock columns (excluded from deterministic exports)

        Example:
            >>> df = report.to_dataframe(include_timing=False)
            >>> df.pivot(index="sweep_db", columns="filter", values="mse_db")
        """
        records = [row.model_dump() for row in self.rows]
        frame = pd.DataFrame(records, columns=list(MetricRow.model_fields))
        if not include_timing:
            frame = frame.drop(columns=list(TIMING_COLUMNS))
        return frame

    def for_filter(self, name: str) -> list[MetricRow]:
        """Rows of one filter, in report order."""
        return [row for row in self.rows if row.filter == name]
