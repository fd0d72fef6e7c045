"""Outlier-insensitive Kalman step: the update refined by online NUV variance estimation.

Each step predicts once, then alternates between estimating the per-dimension outlier
variances gamma^2 and re-running the update with R replaced by diag(r^2 + gamma^2). All
iterations start from the same predicted prior.

Converged EM gives gamma^2 = max(e^2 - S, 0) per entry, with e the prior residual and S its
predicted variance, so clean data is flagged wherever |e| exceeds its own spread.
"""

from __future__ import annotations

import time
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from oikf.core import (
    FloatArray,
    GaussianBelief,
    LinearGaussianModel,
    NuvState,
    StepDiagnostics,
)
from oikf.filters.constants import DEFAULT_CONV_TOL, DEFAULT_MAX_ITERS
from oikf.filters.kalman import (
    _fuse,
    _gain_matrix,
    _observation_vector,
    predict,
    predict_observation,
)
from oikf.filters.nuv import estimate_outlier, nuv_am_update, nuv_em_update

__all__ = ["OikfConfig", "oikf_step", "relative_change"]


class OikfConfig(BaseModel):
    """Inner-loop settings of the outlier-insensitive step.

    ``method`` selects the variance estimator (EM uses first and second posterior moments,
    AM the posterior mean only). ``gamma_init="prior_residual"`` estimates the first gamma^2
    from the predicted prior; ``"zero"`` starts every step from the plain Kalman update.
    """

    max_iters: int = Field(default=DEFAULT_MAX_ITERS, ge=1, description="Iterations N")
    conv_tol: float = Field(
        default=DEFAULT_CONV_TOL,
        ge=0.0,
        description="Stop when the relative L-inf change of gamma^2 drops below this",
    )
    method: Literal["EM", "AM"] = Field(default="EM", description="Variance estimator")
    gamma_init: Literal["zero", "prior_residual"] = Field(
        default="prior_residual", description="First-iteration gamma^2"
    )

    model_config = ConfigDict(frozen=True)

    @field_validator("method", mode="before")
    @classmethod
    def _upper_method(cls, value: Any) -> Any:
        return value.upper() if isinstance(value, str) else value


def relative_change(previous: FloatArray, current: FloatArray) -> float:
    """
    Relative L-inf change between two gamma^2 vectors; 0 when both are zero.

    Example:
        >>> relative_change(np.array([4.0, 0.0]), np.array([5.0, 0.0]))
        0.2
    """
    scale = max(float(np.max(np.abs(previous))), float(np.max(np.abs(current))))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(current - previous))) / scale


def _estimate(
    method: str,
    y: FloatArray,
    model: LinearGaussianModel,
    belief: GaussianBelief,
    r_sq: FloatArray,
) -> FloatArray:
    if method == "AM":
        return nuv_am_update(y - model.H @ belief.mean, r_sq)
    return nuv_em_update(y, model, belief.mean, belief.cov, r_sq)


def oikf_step(
    model: LinearGaussianModel,
    posterior: GaussianBelief,
    y: Any,
    config: OikfConfig | None = None,
) -> tuple[GaussianBelief, StepDiagnostics]:
    """
    One outlier-insensitive predict + iterated update cycle.

    Iteration i uses gamma^2_i (from the previous iteration's posterior, or from the prior /
    zero at i = 0), inflates the observation covariance to diag(r^2 + gamma^2_i), and
    recomputes the observation prediction, gain and posterior from the predicted prior. The
    loop stops after ``max_iters`` updates or once gamma^2 stops changing.

    When gamma^2 is zero throughout, the result is bitwise identical to :func:`kf_step`.

    Args:
        model: Validated state-space model
        posterior: Posterior at t-1
        y: Observation at t (length n)
        config: Inner-loop settings (defaults to :class:`OikfConfig`)

    Returns:
        Tuple of (posterior at t, diagnostics with the final gamma^2, outlier estimate and
        NUV state)

    Raises:
        SingularInnovationError: If an inflated innovation covariance cannot be factored.
        NegativeSecondMomentError: If the EM second moment is negative (non-PSD covariance).

    Example:
        >>> belief, diag = oikf_step(model, belief, [0.2, 45.0], OikfConfig(method="AM"))
        >>> bool(diag.outlier_detected[1])
        True
    """
    config = config or OikfConfig()
    start = time.perf_counter()
    y_vec = _observation_vector(y, model.n)
    r_sq = model.r_sq
    prior = predict(model, posterior)

    if config.gamma_init == "zero":
        gamma_sq = np.zeros(model.n)
    else:
        gamma_sq = _estimate(config.method, y_vec, model, prior, r_sq)

    iterations = 0
    while True:
        nuv = NuvState.from_gamma(gamma_sq, r_sq)
        obs_pred = predict_observation(model, prior, nuv.inflated_cov)
        K = _gain_matrix(prior, model, obs_pred)
        result, innovation = _fuse(prior, obs_pred, K, y_vec)
        iterations += 1
        if iterations >= config.max_iters:
            break
        refreshed = _estimate(config.method, y_vec, model, result, r_sq)
        if np.array_equal(refreshed, gamma_sq) or (
            relative_change(gamma_sq, refreshed) < config.conv_tol
        ):
            break
        gamma_sq = refreshed

    outlier = estimate_outlier(y_vec - model.H @ result.mean, nuv.gamma_sq, r_sq)
    diagnostics = StepDiagnostics.model_construct(
        innovation=innovation,
        gamma_sq_final=nuv.gamma_sq,
        iterations_used=iterations,
        outlier_detected=nuv.gamma_sq > 0.0,
        elapsed=time.perf_counter() - start,
        outlier_estimate=outlier,
        nuv=nuv,
    )
    return result, diagnostics
