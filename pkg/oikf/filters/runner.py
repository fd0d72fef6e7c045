"""Drive a step function over an observation sequence and collect per-step results."""

from __future__ import annotations

import time
from collections.abc import Callable
from functools import partial
from typing import Any, Literal

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from oikf.core import FloatArray, GaussianBelief, LinearGaussianModel, StepDiagnostics
from oikf.core.diagnostics import BoolArray, IntArray
from oikf.exceptions import DimensionMismatchError, FilterError
from oikf.filters.chi2 import Chi2Config, chi2_gated_step
from oikf.filters.kalman import kf_step
from oikf.filters.outlier_insensitive import OikfConfig, oikf_step

__all__ = ["FilterKind", "FILTER_KINDS", "StepFunction", "FilterRun", "make_step", "run_filter"]

FilterKind = Literal["kf", "chi2", "oikf-em", "oikf-am"]
FILTER_KINDS: tuple[FilterKind, ...] = ("kf", "chi2", "oikf-em", "oikf-am")

StepFunction = Callable[
    [LinearGaussianModel, GaussianBelief, FloatArray], tuple[GaussianBelief, StepDiagnostics]
]


def _kf(_: Any) -> StepFunction:
    return kf_step


def _chi2(config: Any) -> StepFunction:
    chi2 = config if isinstance(config, Chi2Config) else Chi2Config()
    return partial(chi2_gated_step, config=chi2)


def _oikf(method: str) -> Callable[[Any], StepFunction]:
    def build(config: Any) -> StepFunction:
        base = config if isinstance(config, OikfConfig) else OikfConfig()
        return partial(oikf_step, config=base.model_copy(update={"method": method}))

    return build


_BUILDERS: dict[str, Callable[[Any], StepFunction]] = {
    "kf": _kf,
    "chi2": _chi2,
    "oikf-em": _oikf("EM"),
    "oikf-am": _oikf("AM"),
}


def make_step(kind: FilterKind, config: OikfConfig | Chi2Config | None = None) -> StepFunction:
    """
    Return the per-step callable for a filter kind.

    ``config`` applies to the kinds it belongs to (``Chi2Config`` for ``chi2``,
    ``OikfConfig`` for both OIKF kinds, whose ``method`` the kind overrides) and is ignored
    otherwise.

    Raises:
        ValueError: If ``kind`` is unknown.

    Example:
        >>> step = make_step("oikf-am", OikfConfig(max_iters=5))
        >>> belief, diag = step(model, belief, y)
    """
    try:
        builder = _BUILDERS[kind]
    except KeyError:
        raise ValueError(f"Unknown filter kind {kind!r}; expected one of {FILTER_KINDS}") from None
    return builder(config)


class FilterRun(BaseModel):
    """Per-step record of one filter over one sequence."""

    means: FloatArray = Field(description="Posterior means (T x m)")
    cov_traces: FloatArray = Field(description="Posterior covariance traces (T)")
    gamma_sq: FloatArray = Field(description="Final outlier variances per step (T x n)")
    detections: BoolArray = Field(description="Outlier flags per step (T x n)")
    outlier_estimates: FloatArray = Field(description="MAP outlier estimates (T x n)")
    iterations: IntArray = Field(description="Inner iterations per step (T)")
    elapsed: float = Field(ge=0.0, description="Total wall-clock seconds over all steps")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @property
    def steps(self) -> int:
        """Number of filtered steps T."""
        return int(self.means.shape[0])

    @property
    def per_step_time(self) -> float:
        """Mean wall-clock seconds per step."""
        return self.elapsed / self.steps if self.steps else 0.0

    @property
    def detection_count(self) -> int:
        """Number of (step, dimension) entries flagged as outliers."""
        return int(np.count_nonzero(self.detections))

    @property
    def mean_iterations(self) -> float:
        """Average inner iterations per step."""
        return float(np.mean(self.iterations)) if self.steps else 0.0


def run_filter(
    model: LinearGaussianModel,
    observations: FloatArray,
    initial: GaussianBelief,
    step: StepFunction,
) -> FilterRun:
    """
    Filter a T x n observation matrix starting from ``initial``.

    ``initial`` is the belief after the sample that initialised it (see
    :func:`oikf.filters.kalman.initial_belief`); every row of ``observations`` is filtered.

    Args:
        model: Validated state-space model
        observations: Observation matrix (T x n)
        initial: Starting posterior
        step: Step function, e.g. from :func:`make_step`

    Returns:
        FilterRun with one row per observation

    Raises:
        DimensionMismatchError: If ``observations`` is not T x n.
        FilterError: Any numerical fault from the step, with ``step`` set to the row index.
    """
    obs = np.asarray(observations, dtype=np.float64)
    if obs.ndim != 2 or obs.shape[1] != model.n:
        raise DimensionMismatchError(
            f"observations have shape {obs.shape}, expected (T, {model.n})", matrix="y"
        )
    steps = obs.shape[0]
    means = np.empty((steps, model.m))
    traces = np.empty(steps)
    gamma_sq = np.zeros((steps, model.n))
    detections = np.zeros((steps, model.n), dtype=bool)
    outliers = np.zeros((steps, model.n))
    iterations = np.ones(steps, dtype=np.int64)

    belief = initial
    start = time.perf_counter()
    for t in range(steps):
        try:
            belief, diagnostics = step(model, belief, obs[t])
        except FilterError as exc:
            exc.step = t
            logger.error(f"Filter failed at step {t}: {exc}")
            raise
        means[t] = belief.mean
        traces[t] = np.trace(belief.cov)
        gamma_sq[t] = diagnostics.gamma_sq_final
        detections[t] = diagnostics.outlier_detected
        outliers[t] = diagnostics.outlier_estimate
        iterations[t] = diagnostics.iterations_used
    elapsed = time.perf_counter() - start

    logger.debug(
        f"Filtered {steps} steps in {elapsed:.4f}s "
        f"({int(detections.sum())} detections, {iterations.mean() if steps else 0:.2f} iters/step)"
    )
    return FilterRun.model_construct(
        means=means,
        cov_traces=traces,
        gamma_sq=gamma_sq,
        detections=detections,
        outlier_estimates=outliers,
        iterations=iterations,
        elapsed=elapsed,
    )
