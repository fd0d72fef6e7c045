"""Per-step runtime measurement."""

from __future__ import annotations

import statistics
from collections.abc import Sequence
from typing import cast

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from oikf.filters import (
    Chi2Config,
    FilterKind,
    InitConfig,
    OikfConfig,
    initial_belief,
    make_step,
    run_filter,
)
from oikf.scenario import OutlierSpec, WnaSpec, generate, wna_model

__all__ = ["MIN_STEPS", "RuntimeResult", "measure_runtime", "measure_runtimes"]

MIN_STEPS = 1000


class RuntimeResult(BaseModel):
    """Median per-step wall time of one filter."""

    filter: str = Field(description="Filter name")
    steps: int = Field(ge=1, description="Filtered steps per repetition")
    repetitions: int = Field(ge=1, description="Timed repetitions (warm-up excluded)")
    per_step_seconds: float = Field(ge=0.0, description="Median over repetitions")
    samples: tuple[float, ...] = Field(description="Per-step seconds of each repetition")
    mean_iterations: float = Field(ge=0.0, description="Inner iterations per step")

    model_config = ConfigDict(frozen=True)

    @property
    def per_step_ms(self) -> float:
        """Median per-step time in milliseconds."""
        return 1e3 * self.per_step_seconds


def measure_runtimes(
    kinds: Sequence[str],
    wna: WnaSpec,
    outliers: OutlierSpec,
    steps: int = 2000,
    *,
    repetitions: int = 10,
    seed: int = 0,
    oikf: OikfConfig | None = None,
    chi2: Chi2Config | None = None,
    init: InitConfig | None = None,
) -> list[RuntimeResult]:
    """
    Median per-step wall time of several filters on one shared simulated sequence.

    Every filter gets an untimed warm-up run before any timing starts. The timed runs are
    interleaved: repetition k runs the filters in ``kinds`` order rotated by k. Runs are
    single-threaded and time the whole step, inner NUV iterations included.

    Args:
        kinds: Filters to time (``raw`` is not a filter and is skipped)
        wna: Scenario; its horizon is replaced by ``steps + 1``
        outliers: Outlier law of the simulated data
        steps: Filtered steps per run (>= 1000)
        repetitions: Timed repetitions per filter
        seed: Simulation seed

    Returns:
        One result per timed filter, in ``kinds`` order

    Raises:
        ValueError: If ``steps`` < 1000, ``repetitions`` < 1 or no filter is left to time.

    Example:
        >>> am, em = measure_runtimes(["oikf-am", "oikf-em"], WnaSpec(), OutlierSpec())
        >>> am.per_step_seconds / em.per_step_seconds
    """
    if steps < MIN_STEPS:
        raise ValueError(f"steps must be >= {MIN_STEPS}, got {steps}")
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")
    timed = [cast(FilterKind, kind) for kind in dict.fromkeys(kinds) if kind != "raw"]
    if not timed:
        raise ValueError("no filter to time")

    scenario = wna.model_copy(update={"horizon": steps + 1})
    model = wna_model(scenario)
    trajectory = generate(model, scenario, outliers, seed)
    initial = initial_belief(
        model, trajectory.observations[0], trajectory.states[0], init or InitConfig()
    )
    observations = trajectory.observations[1:]
    steppers = {kind: make_step(kind, chi2 if kind == "chi2" else oikf) for kind in timed}

    iterations = {
        kind: run_filter(model, observations, initial, step).mean_iterations
        for kind, step in steppers.items()
    }
    samples: dict[str, list[float]] = {kind: [] for kind in timed}
    for repetition in range(repetitions):
        shift = repetition % len(timed)
        for kind in timed[shift:] + timed[:shift]:
            run = run_filter(model, observations, initial, steppers[kind])
            samples[kind].append(run.elapsed / steps)

    results = []
    for kind in timed:
        result = RuntimeResult(
            filter=kind,
            steps=steps,
            repetitions=repetitions,
            per_step_seconds=statistics.median(samples[kind]),
            samples=tuple(samples[kind]),
            mean_iterations=iterations[kind],
        )
        logger.info(f"{kind}: {result.per_step_ms:.4f} ms/step over {repetitions} repetition(s)")
        results.append(result)
    return results


def measure_runtime(
    kind: FilterKind,
    wna: WnaSpec,
    outliers: OutlierSpec,
    steps: int = 2000,
    *,
    repetitions: int = 10,
    seed: int = 0,
    oikf: OikfConfig | None = None,
    chi2: Chi2Config | None = None,
    init: InitConfig | None = None,
) -> RuntimeResult:
    """Per-step time of a single filter; see :func:`measure_runtimes`."""
    (result,) = measure_runtimes(
        [kind],
        wna,
        outliers,
        steps,
        repetitions=repetitions,
        seed=seed,
        oikf=oikf,
        chi2=chi2,
        init=init,
    )
    return result
