"""``oikf-bench`` command line.

Subcommands:

- ``synth``: Monte Carlo sweep on synthetic WNA data (``--seed`` required)
- ``dataset``: fixed-r^2 and grid-optimal position errors on a trajectory CSV
- ``grid``: grid search of the assumed r^2 or q^2 on synthetic data
- ``runtime``: median per-step wall time of each filter

Flags override values from ``--config``. Exit status: 0 on success, 1 on a model, filter,
dataset or I/O error, 2 on a usage error.

Example:
    $ oikf-bench synth --seed 7 --outlier-prob 0.2 --sweep -10 0 10 20 --trials 50
    $ oikf-bench dataset --data gps.csv --obs-columns east north --truth-columns gt_e gt_n
"""

from __future__ import annotations

import argparse
import sys
from collections.abc import Callable, Sequence
from pathlib import Path
from typing import Any

from loguru import logger

from oikf import __version__
from oikf.bench import (
    BENCH_FILTERS,
    EXPORT_FORMATS,
    ExperimentSpec,
    dataset_table,
    estimate_trajectory,
    export,
    export_runtimes,
    export_trajectory,
    grid_search,
    load_experiment,
    measure_runtimes,
    run_experiment,
)
from oikf.bench.export import render_table
from oikf.data import DatasetSchema
from oikf.exceptions import FilterError
from oikf.scenario import db_to_linear
from oikf.utils.logging import level_from_verbosity, setup_logger

__all__ = ["build_parser", "main"]

DEFAULT_R_GRID_DB = tuple(float(value) for value in range(-10, 31, 2))
DEFAULT_Q_GRID_DB = tuple(float(value) for value in range(-30, 11, 5))


def _filters(value: str) -> list[str]:
    names = [part.strip().lower() for part in value.split(",") if part.strip()]
    unknown = [name for name in names if name not in BENCH_FILTERS]
    if unknown or not names:
        raise argparse.ArgumentTypeError(
            f"unknown filter(s) {unknown or value!r}; choose from {', '.join(BENCH_FILTERS)}"
        )
    return names


def _formats(value: str) -> list[str]:
    names = [part.strip().lower() for part in value.split(",") if part.strip()]
    unknown = [name for name in names if name not in EXPORT_FORMATS]
    if unknown or not names:
        raise argparse.ArgumentTypeError(
            f"unknown format(s) {unknown or value!r}; choose from {', '.join(EXPORT_FORMATS)}"
        )
    return names


def _add_logging(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("logging")
    group.add_argument("-v", "--verbose", action="count", default=0, help="More log output")
    group.add_argument("-q", "--quiet", action="store_true", help="Errors only")
    group.add_argument("--log-level", help="Explicit loguru level (overrides -v/-q)")
    group.add_argument("--log-file", type=Path, help="Also log to this (rotated) file")
    group.add_argument("--log-json", action="store_true", help="Serialize the log file as JSON")


def _add_experiment(parser: argparse.ArgumentParser, *, seed_required: bool) -> None:
    parser.add_argument("--config", type=Path, help="TOML experiment file")
    parser.add_argument("--seed", type=int, required=seed_required, help="Seed base")
    parser.add_argument("--filters", type=_filters, help="Comma list, e.g. kf,chi2,oikf-am")
    parser.add_argument("--trials", type=int, help="Monte Carlo trials per point")
    parser.add_argument("--workers", type=int, help="Worker threads")
    parser.add_argument("--output-dir", type=Path, help="Report directory")
    parser.add_argument("--progress", action="store_true", help="Show a progress bar")

    wna = parser.add_argument_group("scenario")
    wna.add_argument("--tau", type=float, help="Sampling interval")
    wna.add_argument("--q-db", type=float, help="Process-noise intensity q^2 in dB")
    wna.add_argument("--r-db", type=float, help="Observation-noise variance r^2 in dB")
    wna.add_argument("--horizon", type=int, help="Steps per trial")
    wna.add_argument("--observe", choices=["full", "position"], help="Observed components")

    outliers = parser.add_argument_group("outliers")
    outliers.add_argument("--outlier-prob", type=float, help="Bernoulli probability p")
    outliers.add_argument("--rayleigh-scale", type=float, help="Rayleigh scale beta")
    outliers.add_argument("--sign-mode", choices=["random_sign", "positive"])

    oikf = parser.add_argument_group("outlier-insensitive filter")
    oikf.add_argument("--max-iters", type=int, help="Inner iterations N")
    oikf.add_argument("--conv-tol", type=float, help="Relative gamma^2 change to stop at")
    oikf.add_argument("--gamma-init", choices=["zero", "prior_residual"])

    gate = parser.add_argument_group("chi-square gate / initialisation")
    gate.add_argument("--confidence", type=float, help="Chi-square confidence level")
    gate.add_argument("--init-mode", choices=["truth", "observation"])
    gate.add_argument("--init-cov-scale", type=float, help="Initial covariance scale")


def _add_outputs(parser: argparse.ArgumentParser, default_formats: str) -> None:
    parser.add_argument(
        "--formats",
        type=_formats,
        default=_formats(default_formats),
        help=f"Comma list of {', '.join(EXPORT_FORMATS)} (default {default_formats})",
    )
    parser.add_argument("--trajectory-out", type=Path, help="Write per-step estimates here")


def build_parser() -> argparse.ArgumentParser:
    """Build the ``oikf-bench`` argument parser."""
    parser = argparse.ArgumentParser(
        prog="oikf-bench",
        description="Benchmark outlier-insensitive Kalman filters against KF and chi2 gating.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("synth", help="Monte Carlo sweep on synthetic data")
    _add_experiment(synth, seed_required=True)
    synth.add_argument("--sweep-axis", choices=["r_sq", "q_sq"], help="Swept parameter")
    synth.add_argument("--sweep", type=float, nargs="+", help="Sweep values in dB")
    _add_outputs(synth, "csv,table,plotdata")
    _add_logging(synth)
    synth.set_defaults(handler=_cmd_synth)

    dataset = commands.add_parser("dataset", help="Position errors on a trajectory CSV")
    _add_experiment(dataset, seed_required=False)
    dataset.add_argument("--data", type=Path, help="Trajectory CSV")
    dataset.add_argument("--schema", type=Path, help="TOML sidecar with a [dataset] table")
    dataset.add_argument("--time-column", default="time")
    dataset.add_argument("--obs-columns", nargs="+", help="Observed position columns")
    dataset.add_argument("--truth-columns", nargs="+", help="Ground-truth position columns")
    dataset.add_argument(
        "--fixed-r", type=float, default=3.0, help="Observation std for the fixed column"
    )
    dataset.add_argument("--r-grid", type=float, nargs="+", default=list(DEFAULT_R_GRID_DB))
    dataset.add_argument("--q-grid", type=float, nargs="+", default=list(DEFAULT_Q_GRID_DB))
    _add_outputs(dataset, "csv,table")
    _add_logging(dataset)
    dataset.set_defaults(handler=_cmd_dataset)

    grid = commands.add_parser("grid", help="Grid search of the assumed r^2 or q^2")
    _add_experiment(grid, seed_required=False)
    grid.add_argument("--param", choices=["r_sq", "q_sq"], default="r_sq")
    grid.add_argument("--grid", type=float, nargs="+", required=True, help="Values in dB")
    _add_outputs(grid, "csv,table")
    _add_logging(grid)
    grid.set_defaults(handler=_cmd_grid)

    runtime = commands.add_parser("runtime", help="Per-step runtime of each filter")
    _add_experiment(runtime, seed_required=False)
    runtime.add_argument("--steps", type=int, default=2000, help="Steps per run (>= 1000)")
    runtime.add_argument("--repetitions", type=int, default=10, help="Timed repetitions")
    _add_logging(runtime)
    runtime.set_defaults(handler=_cmd_runtime)
    return parser


def _present(**values: Any) -> dict[str, Any]:
    return {key: value for key, value in values.items() if value is not None}


def _spec_from_args(args: argparse.Namespace, **extra: Any) -> ExperimentSpec:
    """Merge ``--config`` with the flags given on the command line."""
    overrides: dict[str, Any] = _present(
        filters=args.filters,
        trials=args.trials,
        workers=args.workers,
        output_dir=args.output_dir,
        seed_base=args.seed,
        sweep_axis=getattr(args, "sweep_axis", None),
        sweep_db=getattr(args, "sweep", None),
        **extra,
    )
    sections = {
        "wna": _present(
            tau=args.tau,
            q_sq=db_to_linear(args.q_db) if args.q_db is not None else None,
            r_sq=db_to_linear(args.r_db) if args.r_db is not None else None,
            horizon=args.horizon,
            observe=args.observe,
        ),
        "outliers": _present(
            prob=args.outlier_prob, rayleigh_scale=args.rayleigh_scale, sign_mode=args.sign_mode
        ),
        "oikf": _present(
            max_iters=args.max_iters, conv_tol=args.conv_tol, gamma_init=args.gamma_init
        ),
        "chi2": _present(confidence=args.confidence),
        "init": _present(mode=args.init_mode, cov_scale=args.init_cov_scale),
    }
    overrides.update({name: table for name, table in sections.items() if table})

    if args.config is not None:
        return load_experiment(args.config, **overrides)
    return ExperimentSpec.model_validate(overrides)


def _write_outputs(args: argparse.Namespace, spec: ExperimentSpec, report: Any) -> None:
    export(report, args.formats, spec.output_dir)
    print(render_table(report), end="")


def _cmd_synth(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    if spec.is_dataset:
        raise ValueError("synth runs on synthetic data; use the dataset subcommand")
    report = run_experiment(spec, progress=args.progress)
    _write_outputs(args, spec, report)
    if args.trajectory_out is not None:
        export_trajectory(estimate_trajectory(spec), args.trajectory_out)
    return 0


def _dataset_schema(args: argparse.Namespace) -> DatasetSchema | None:
    if args.schema is not None:
        return DatasetSchema.from_file(args.schema)
    if args.obs_columns:
        return DatasetSchema(
            time_column=args.time_column,
            observation_columns=tuple(args.obs_columns),
            truth_columns=tuple(args.truth_columns or ()),
        )
    return None


def _cmd_dataset(args: argparse.Namespace) -> int:
    extra = _present(dataset=args.data, schema=_dataset_schema(args))
    spec = _spec_from_args(args, **extra)
    if not spec.is_dataset:
        raise ValueError("dataset runs need --data or a [dataset] path in --config")
    fixed_r_sq = args.fixed_r**2
    report = dataset_table(
        spec, fixed_r_sq=fixed_r_sq, r_grid_db=args.r_grid, q_grid_db=args.q_grid
    )
    _write_outputs(args, spec, report)
    if args.trajectory_out is not None:
        export_trajectory(estimate_trajectory(spec, r_sq=fixed_r_sq), args.trajectory_out)
    return 0


def _cmd_grid(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    result = grid_search(spec, args.param, args.grid, progress=args.progress)
    _write_outputs(args, spec, result.report)
    for name, value_db in result.best_db.items():
        print(f"{name}: best {args.param} = {value_db:g} dB ({result.best_value[name]:.6g})")
    if args.trajectory_out is not None:
        export_trajectory(estimate_trajectory(spec), args.trajectory_out)
    return 0


def _cmd_runtime(args: argparse.Namespace) -> int:
    spec = _spec_from_args(args)
    results = measure_runtimes(
        spec.filters,
        spec.wna,
        spec.outliers,
        args.steps,
        repetitions=args.repetitions,
        seed=spec.seed_base,
        oikf=spec.oikf,
        chi2=spec.chi2,
        init=spec.init,
    )
    export_runtimes(results, spec.output_dir)
    for item in results:
        print(f"{item.filter:>8}  {item.per_step_ms:.4f} ms/step  {item.mean_iterations:.2f} it")
    by_name = {item.filter: item for item in results}
    if "oikf-am" in by_name and "oikf-em" in by_name:
        ratio = by_name["oikf-am"].per_step_seconds / by_name["oikf-em"].per_step_seconds
        print(f"AM/EM runtime ratio: {ratio:.3f}")
    return 0


def main(argv: Sequence[str] | None = None) -> int:
    """
    Entry point of ``oikf-bench``.

    Returns:
        Process exit status (argparse itself exits with 2 on usage errors)
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    level = args.log_level or level_from_verbosity(args.verbose, args.quiet)
    setup_logger(level=level, log_file=args.log_file, serialize=args.log_json)

    handler: Callable[[argparse.Namespace], int] = args.handler
    try:
        return handler(args)
    except (ValueError, FilterError, OSError) as exc:
        logger.error(f"{args.command} failed: {type(exc).__name__}: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
