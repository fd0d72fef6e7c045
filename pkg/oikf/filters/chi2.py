"""Chi-square innovation gate: detect an outlying observation vector and skip its update."""

from __future__ import annotations

import time
from functools import lru_cache
from typing import Any

from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import bisect
from scipy.special import gammainc

from oikf.core import FloatArray, GaussianBelief, LinearGaussianModel, StepDiagnostics
from oikf.filters.constants import DEFAULT_CONFIDENCE, QUANTILE_XTOL
from oikf.filters.kalman import (
    _fuse,
    _observation_vector,
    factor_innovation,
    predict,
    predict_observation,
    solve_innovation,
)

__all__ = ["Chi2Config", "chi2_statistic", "chi2_quantile", "chi2_gated_step"]


class Chi2Config(BaseModel):
    """Gate settings. ``dof`` defaults to the observation dimension n."""

    confidence: float = Field(
        default=DEFAULT_CONFIDENCE, gt=0.0, lt=1.0, description="Confidence level of the test"
    )
    dof: int | None = Field(default=None, ge=1, description="Degrees of freedom (None: n)")

    model_config = ConfigDict(frozen=True)


def chi2_statistic(innovation: FloatArray, S: FloatArray) -> float:
    """
    Normalized innovation squared, dy^T S^-1 dy.

    Raises:
        SingularInnovationError: If S cannot be factored.

    Example:
        >>> chi2_statistic(np.array([3.0]), np.array([[9.0]]))
        1.0
    """
    weighted = solve_innovation(factor_innovation(S), innovation)
    return max(float(innovation @ weighted), 0.0)


@lru_cache(maxsize=256)
def chi2_quantile(confidence: float, dof: int) -> float:
    """
    Chi-square quantile by bisection on the regularized lower incomplete gamma function.

    Solves P(dof/2, x/2) = confidence to ``QUANTILE_XTOL``, doubling the upper bracket until
    it contains the root. Results are cached per (confidence, dof).

    Raises:
        ValueError: If ``confidence`` is not in (0, 1) or ``dof`` < 1.

    Example:
        >>> round(chi2_quantile(0.95, 1), 3)
        3.841
    """
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must be in (0, 1), got {confidence}")
    if dof < 1:
        raise ValueError(f"dof must be >= 1, got {dof}")

    def gap(x: float) -> float:
        return float(gammainc(dof / 2.0, x / 2.0)) - confidence

    upper = float(dof)
    while gap(upper) < 0.0:
        upper *= 2.0
    return float(bisect(gap, 0.0, upper, xtol=QUANTILE_XTOL, maxiter=500))


def chi2_gated_step(
    model: LinearGaussianModel,
    posterior: GaussianBelief,
    y: Any,
    config: Chi2Config | None = None,
) -> tuple[GaussianBelief, StepDiagnostics]:
    """
    Kalman step that discards the whole observation when the chi-square test rejects it.

    A gated step returns the predicted prior unchanged (mean and covariance) and flags every
    dimension as an outlier; otherwise the result equals :func:`kf_step`.

    Args:
        model: Validated state-space model
        posterior: Posterior at t-1
        y: Observation at t (length n)
        config: Gate settings (defaults to :class:`Chi2Config`)

    Returns:
        Tuple of (posterior at t, diagnostics)
    """
    config = config or Chi2Config()
    start = time.perf_counter()
    y_vec = _observation_vector(y, model.n)
    prior = predict(model, posterior)
    obs_pred = predict_observation(model, prior, model.R)
    factor = factor_innovation(obs_pred.cov)
    innovation = y_vec - obs_pred.mean
    statistic = float(innovation @ solve_innovation(factor, innovation))
    threshold = chi2_quantile(config.confidence, config.dof or model.n)
    if statistic > threshold:
        return prior, StepDiagnostics.nominal(
            innovation, time.perf_counter() - start, detected=True
        )

    K = solve_innovation(factor, (prior.cov @ model.H.T).T).T
    result, innovation = _fuse(prior, obs_pred, K, y_vec)
    return result, StepDiagnostics.nominal(innovation, time.perf_counter() - start)
