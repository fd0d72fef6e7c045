"""Tests for Monte Carlo experiments, grid search and dataset tables."""

import math
from pathlib import Path

import pandas as pd
import pytest
from pandas.testing import assert_frame_equal

from oikf.bench import experiment
from oikf.bench.experiment import (
    PARTIAL_METRICS_FILE,
    _best,
    dataset_table,
    estimate_trajectory,
    grid_search,
    load_dataset,
    run_experiment,
)
from oikf.bench.metrics import TrialStats, aggregate
from oikf.bench.spec import ExperimentSpec
from oikf.data import DatasetSchema, export_csv
from oikf.exceptions import DatasetError, SingularInnovationError
from oikf.scenario import OutlierSpec, WnaSpec, generate, wna_position_model


def _spec(tmp_path: Path, **kwargs) -> ExperimentSpec:
    fields = {
        "wna": WnaSpec(horizon=120),
        "sweep_db": (0.0,),
        "trials": 4,
        "seed_base": 3,
        "output_dir": tmp_path / "results",
    }
    fields.update(kwargs)
    return ExperimentSpec(**fields)


@pytest.fixture
def gps_csv(tmp_path: Path) -> Path:
    """Position-only trajectory with outliers, exported in the standard layout."""
    spec = WnaSpec(observe="position", horizon=150)
    trajectory = generate(wna_position_model(spec), spec, OutlierSpec(prob=0.1), seed=21)
    return export_csv(trajectory, tmp_path / "gps.csv")


def _dataset_spec(tmp_path: Path, gps_csv: Path, **kwargs) -> ExperimentSpec:
    return _spec(
        tmp_path,
        dataset=gps_csv,
        schema=DatasetSchema(observation_columns=("y0",), truth_columns=("x0",)),
        **kwargs,
    )


class TestRunExperiment:
    """Tests for run_experiment on synthetic data."""

    def test_rows_in_point_then_filter_order(self, tmp_path: Path) -> None:
        spec = _spec(tmp_path, sweep_db=(-5.0, 5.0))
        report = run_experiment(spec)
        assert len(report) == 8
        assert [row.filter for row in report.rows[:4]] == list(spec.filters)
        assert [row.sweep_db for row in report.rows] == [-5.0] * 4 + [5.0] * 4
        assert all(row.trials == 4 and row.steps == 119 for row in report.rows)

    def test_reproducible_across_worker_counts(self, tmp_path: Path) -> None:
        first = run_experiment(_spec(tmp_path, workers=1)).to_dataframe(include_timing=False)
        second = run_experiment(_spec(tmp_path, workers=4)).to_dataframe(include_timing=False)
        assert_frame_equal(first, second)

    def test_outlier_insensitive_beats_kf(self, tmp_path: Path) -> None:
        report = run_experiment(_spec(tmp_path))
        mse = {row.filter: row.mse for row in report.rows}
        assert mse["oikf-em"] < mse["kf"]
        assert mse["oikf-am"] < mse["kf"]

    def test_recall_of_large_outliers(self, tmp_path: Path) -> None:
        report = run_experiment(_spec(tmp_path, filters=("oikf-am", "kf")))
        rows = {row.filter: row for row in report.rows}
        assert rows["oikf-am"].recall > 0.9
        assert rows["kf"].recall == 0.0

    def test_raw_reference_matches_noise_level(self, tmp_path: Path) -> None:
        spec = _spec(tmp_path, filters=("raw",), outliers=OutlierSpec(prob=0.0))
        row = run_experiment(spec).rows[0]
        assert row.mse == pytest.approx(1.0, abs=0.25)

    def test_q_sweep(self, tmp_path: Path) -> None:
        spec = _spec(tmp_path, filters=("kf",), sweep_axis="q_sq", sweep_db=(-20.0, 0.0))
        rows = run_experiment(spec).rows
        assert [row.q_sq_db for row in rows] == pytest.approx([-20.0, 0.0])
        assert all(row.r_sq_db == pytest.approx(0.0) for row in rows)

    def test_progress_callback(self, tmp_path: Path) -> None:
        seen: list[tuple[int, int]] = []
        run_experiment(_spec(tmp_path, filters=("kf",)), progress_callback=lambda d, t: seen.append((d, t)))
        assert seen[-1] == (4, 4)
        assert len(seen) == 4

    def test_partial_metrics_flushed_on_failure(self, tmp_path: Path, monkeypatch) -> None:
        original = experiment._evaluate_trial
        calls = {"count": 0}

        def failing(sequences, spec):
            calls["count"] += 1
            if calls["count"] > 2:
                raise SingularInnovationError("innovation covariance S is singular", matrix="S")
            return original(sequences, spec)

        monkeypatch.setattr(experiment, "_evaluate_trial", failing)
        spec = _spec(tmp_path, filters=("kf", "oikf-am"), trials=2, workers=1, sweep_db=(0.0, 5.0))
        with pytest.raises(SingularInnovationError):
            run_experiment(spec)
        partial = pd.read_csv(spec.output_dir / PARTIAL_METRICS_FILE)
        assert list(partial["filter"]) == ["kf", "oikf-am"]
        assert "step_time_ms" not in partial.columns


class TestGridSearch:
    """Tests for grid_search and tie-breaking."""

    def test_matched_noise_wins(self, tmp_path: Path) -> None:
        spec = _spec(tmp_path, filters=("kf",), outliers=OutlierSpec(prob=0.0), trials=8)
        result = grid_search(spec, "r_sq", [10.0, -10.0, 0.0])
        assert result.best_db == {"kf": 0.0}
        assert result.best_value["kf"] == pytest.approx(1.0)
        assert [row.sweep_db for row in result.report.rows] == [-10.0, 0.0, 10.0]
        assert all(row.label == "grid" for row in result.report.rows)

    def test_empty_grid(self, tmp_path: Path) -> None:
        with pytest.raises(ValueError):
            grid_search(_spec(tmp_path), "r_sq", [])

    def test_ties_keep_smaller_value(self) -> None:
        stats = [TrialStats(sq_error=5.0, steps=5)]
        rows = [
            aggregate(stats, filter_name="kf", sweep_axis="r_sq", sweep_db=db, r_sq_db=db, q_sq_db=0.0)
            for db in (-5.0, 0.0, 5.0)
        ]
        assert _best(rows, ["kf"])["kf"].sweep_db == -5.0


class TestDatasetRuns:
    """Tests for dataset-driven runs."""

    def test_load_dataset_requires_truth(self, tmp_path: Path, gps_csv: Path) -> None:
        spec = _spec(tmp_path, dataset=gps_csv, schema=DatasetSchema(observation_columns=("y0",)))
        with pytest.raises(DatasetError, match="ground-truth"):
            load_dataset(spec)

    def test_load_dataset_requires_path(self, tmp_path: Path) -> None:
        with pytest.raises(DatasetError):
            load_dataset(_spec(tmp_path))

    def test_run_on_dataset_single_pass(self, tmp_path: Path, gps_csv: Path) -> None:
        report = run_experiment(_dataset_spec(tmp_path, gps_csv, filters=("kf", "oikf-am")))
        assert [row.filter for row in report.rows] == ["kf", "oikf-am"]
        assert all(row.trials == 1 and row.steps == 149 for row in report.rows)
        assert all(math.isnan(row.recall) for row in report.rows)

    def test_dataset_table_optimal_not_worse(self, tmp_path: Path, gps_csv: Path) -> None:
        spec = _dataset_spec(tmp_path, gps_csv, filters=("kf", "oikf-em"))
        report = dataset_table(spec, fixed_r_sq=1.0, r_grid_db=[-5.0, 0.0, 5.0], q_grid_db=[-10.0, 0.0])
        assert [(row.filter, row.label) for row in report.rows] == [
            ("kf", "fixed"),
            ("oikf-em", "fixed"),
            ("kf", "optimal"),
            ("oikf-em", "optimal"),
        ]
        for name in ("kf", "oikf-em"):
            fixed, optimal = report.for_filter(name)
            assert optimal.mse <= fixed.mse * (1 + 1e-9)

    def test_dataset_table_fixed_row_searches_q(self, tmp_path: Path, gps_csv: Path) -> None:
        spec = _dataset_spec(tmp_path, gps_csv, filters=("kf",))
        q_grid = [-20.0, -10.0, 0.0, 10.0]
        fixed = dataset_table(spec, fixed_r_sq=4.0, r_grid_db=[0.0], q_grid_db=q_grid).rows[0]
        singles = [
            dataset_table(spec, fixed_r_sq=4.0, r_grid_db=[0.0], q_grid_db=[q_db]).rows[0]
            for q_db in q_grid
        ]
        assert fixed.label == "fixed"
        assert fixed.r_sq_db == pytest.approx(10 * math.log10(4.0))
        assert min(abs(fixed.q_sq_db - q_db) for q_db in q_grid) < 1e-9
        assert fixed.mse == min(row.mse for row in singles)
        assert len({row.mse for row in singles}) > 1

    def test_dataset_table_empty_grid(self, tmp_path: Path, gps_csv: Path) -> None:
        with pytest.raises(ValueError):
            dataset_table(_dataset_spec(tmp_path, gps_csv), r_grid_db=[], q_grid_db=[0.0])


class TestEstimateTrajectory:
    """Tests for estimate_trajectory."""

    def test_synthetic_columns(self, tmp_path: Path) -> None:
        spec = _spec(tmp_path, filters=("kf", "oikf-am", "raw"))
        frame = estimate_trajectory(spec)
        assert list(frame.columns) == ["time", "observed_0", "truth_0", "kf_0", "oikf-am_0"]
        assert len(frame) == 119
        assert frame["time"].iloc[0] == 1.0

    def test_dataset_columns(self, tmp_path: Path, gps_csv: Path) -> None:
        frame = estimate_trajectory(_dataset_spec(tmp_path, gps_csv, filters=("kf",)), r_sq=4.0)
        assert list(frame.columns) == ["time", "observed_0", "truth_0", "kf_0"]
        assert len(frame) == 149
