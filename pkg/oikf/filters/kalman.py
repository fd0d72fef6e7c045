"""Classical Kalman recursion: predict, observation prediction, gain, and update.

Every function is pure over immutable values, so Monte Carlo trials may call them from
several threads at once. Nothing here logs on the success path; a step runs thousands of
times per trial and runtime comparisons must not include log I/O.
"""

from __future__ import annotations

import time
from typing import Any, Literal

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve_discrete_are

from oikf.core import (
    FloatArray,
    GaussianBelief,
    LinearGaussianModel,
    ObservationPrediction,
    StepDiagnostics,
    as_readonly,
    symmetrize,
)
from oikf.exceptions import DimensionMismatchError, FilterError, SingularInnovationError
from oikf.filters.constants import CONDITION_LIMIT

__all__ = [
    "KalmanGain",
    "InitConfig",
    "predict",
    "predict_observation",
    "gain",
    "update",
    "kf_step",
    "factor_innovation",
    "solve_innovation",
    "initial_belief",
    "steady_state_covariance",
]

CholeskyFactor = tuple[FloatArray, bool]


class KalmanGain(BaseModel):
    """Gain matrix K (m x n) weighing the innovation against the prior."""

    gain: FloatArray = Field(description="Kalman gain K = P H^T S^-1")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("gain", mode="before")
    @classmethod
    def _coerce_gain(cls, value: Any) -> FloatArray:
        return as_readonly(value, ndim=2)


class InitConfig(BaseModel):
    """How the first sample of a sequence initialises the filter.

    ``truth`` starts from the first ground-truth state and falls back to ``observation``
    (pseudo-inverse back-projection H^+ y_0) when no truth is available.
    """

    mode: Literal["truth", "observation"] = Field(
        default="truth", description="Source of the initial mean"
    )
    cov_scale: float | None = Field(
        default=None,
        gt=0.0,
        description="Initial covariance cov_scale * I; default max(diag Q, diag H^+ R H^+T)",
    )

    model_config = ConfigDict(frozen=True)


def _observation_vector(y: Any, n: int) -> FloatArray:
    arr = np.asarray(y, dtype=np.float64).reshape(-1)
    if arr.shape != (n,):
        raise DimensionMismatchError(
            f"observation has shape {arr.shape}, expected ({n},)", matrix="y"
        )
    return arr


def predict(model: LinearGaussianModel, posterior: GaussianBelief) -> GaussianBelief:
    """
    Propagate the previous posterior through the dynamics.

    Args:
        model: Validated state-space model
        posterior: Posterior at t-1

    Returns:
        Prior at t: mean F x, covariance sym(F P F^T + Q)

    Raises:
        DimensionMismatchError: If the belief does not have the model's state dimension.

    Example:
        >>> model = LinearGaussianModel(F=[[2.0]], H=[[1.0]], Q=[[1.0]], R=[[1.0]])
        >>> predict(model, GaussianBelief(mean=[1.0], cov=[[1.0]])).cov
        array([[5.]])
    """
    if posterior.mean.shape != (model.m,) or posterior.cov.shape != (model.m, model.m):
        raise DimensionMismatchError(
            f"posterior has dimension {posterior.mean.shape[0]}, model has m={model.m}",
            matrix="posterior",
        )
    F = model.F
    mean = F @ posterior.mean
    cov = symmetrize(F @ posterior.cov @ F.T + model.Q)
    return GaussianBelief.unchecked(mean, cov)


def predict_observation(
    model: LinearGaussianModel, prior: GaussianBelief, noise_cov: FloatArray
) -> ObservationPrediction:
    """
    Predict the observation and its innovation covariance S = H P H^T + noise_cov.

    ``noise_cov`` is R for the plain filter and the inflated diag(r^2 + gamma^2) inside the
    outlier-insensitive loop.

    Raises:
        DimensionMismatchError: If ``noise_cov`` is not n x n.
    """
    if noise_cov.shape != (model.n, model.n):
        raise DimensionMismatchError(
            f"noise_cov has shape {noise_cov.shape}, expected ({model.n}, {model.n})",
            matrix="noise_cov",
        )
    H = model.H
    mean = H @ prior.mean
    cov = H @ prior.cov @ H.T + noise_cov
    return ObservationPrediction.unchecked(mean, cov)


def factor_innovation(S: FloatArray) -> CholeskyFactor:
    """
    Cholesky-factor the innovation covariance, enforcing the condition bound.

    The condition number is the exact spectral one, lambda_max / lambda_min from
    ``eigvalsh``; the pivot ratio of the factor only bounds it from below.

    Raises:
        SingularInnovationError: If S is not positive definite, is non-finite, or its
            condition number reaches ``CONDITION_LIMIT``.
    """
    try:
        factor: CholeskyFactor = cho_factor(S, lower=True, check_finite=False)
    except LinAlgError as exc:
        logger.error(f"Innovation covariance is not positive definite: {exc}")
        raise SingularInnovationError(
            "innovation covariance S is not positive definite", matrix="S"
        ) from exc
    pivots = np.abs(np.diagonal(factor[0]))
    if not np.all(np.isfinite(pivots)) or float(pivots.min()) == 0.0:
        logger.error("Innovation covariance factor has a zero or non-finite pivot")
        raise SingularInnovationError("innovation covariance S is singular", matrix="S")
    eigenvalues = np.linalg.eigvalsh(S)
    smallest = float(eigenvalues[0])
    condition = float(eigenvalues[-1]) / smallest if smallest > 0.0 else np.inf
    if condition >= CONDITION_LIMIT:
        logger.error(f"Innovation covariance condition number {condition:.3e} too large")
        raise SingularInnovationError(
            f"innovation covariance S is ill-conditioned (cond {condition:.3e})", matrix="S"
        )
    return factor


def solve_innovation(factor: CholeskyFactor, rhs: FloatArray) -> FloatArray:
    """Solve S z = rhs with a factor from :func:`factor_innovation`."""
    solution: FloatArray = cho_solve(factor, rhs, check_finite=False)
    return solution


def _gain_matrix(
    prior: GaussianBelief, model: LinearGaussianModel, obs_pred: ObservationPrediction
) -> FloatArray:
    factor = factor_innovation(obs_pred.cov)
    cross = prior.cov @ model.H.T
    return solve_innovation(factor, cross.T).T


def gain(
    prior: GaussianBelief, model: LinearGaussianModel, obs_pred: ObservationPrediction
) -> KalmanGain:
    """
    Compute K = P H^T S^-1 by Cholesky solve (S is never inverted explicitly).

    Raises:
        SingularInnovationError: If S fails the factorization or the condition bound.

    Example:
        >>> K = gain(prior, model, predict_observation(model, prior, model.R))
        >>> K.gain.shape == (model.m, model.n)
        True
    """
    matrix = _gain_matrix(prior, model, obs_pred)
    matrix.flags.writeable = False
    return KalmanGain.model_construct(gain=matrix)


def _fuse(
    prior: GaussianBelief, obs_pred: ObservationPrediction, K: FloatArray, y: FloatArray
) -> tuple[GaussianBelief, FloatArray]:
    innovation = y - obs_pred.mean
    mean = prior.mean + K @ innovation
    cov = symmetrize(prior.cov - K @ obs_pred.cov @ K.T)
    return GaussianBelief.unchecked(mean, cov), innovation


def update(
    prior: GaussianBelief,
    obs_pred: ObservationPrediction,
    gain: KalmanGain,
    y: Any,
) -> GaussianBelief:
    """
    Fuse an observation into the prior.

    Args:
        prior: Predicted belief at t
        obs_pred: Observation prediction used to form ``gain``
        gain: Kalman gain
        y: Observation vector (length n)

    Returns:
        Posterior: mean x + K (y - y_hat), covariance sym(P - K S K^T)

    Raises:
        DimensionMismatchError: If ``y`` does not match the prediction.
    """
    y_vec = _observation_vector(y, obs_pred.mean.shape[0])
    posterior, _ = _fuse(prior, obs_pred, gain.gain, y_vec)
    return posterior


def kf_step(
    model: LinearGaussianModel, posterior: GaussianBelief, y: Any
) -> tuple[GaussianBelief, StepDiagnostics]:
    """
    One full predict + update cycle with the nominal noise covariance R.

    Args:
        model: Validated state-space model
        posterior: Posterior at t-1
        y: Observation at t

    Returns:
        Tuple of (posterior at t, diagnostics with zero outlier estimates)

    Example:
        >>> belief, diag = kf_step(model, belief, [0.3, -0.1])
        >>> diag.iterations_used
        1
    """
    start = time.perf_counter()
    y_vec = _observation_vector(y, model.n)
    prior = predict(model, posterior)
    obs_pred = predict_observation(model, prior, model.R)
    K = _gain_matrix(prior, model, obs_pred)
    result, innovation = _fuse(prior, obs_pred, K, y_vec)
    return result, StepDiagnostics.nominal(innovation, time.perf_counter() - start)


def initial_belief(
    model: LinearGaussianModel,
    first_observation: Any,
    first_truth: Any | None = None,
    config: InitConfig | None = None,
) -> GaussianBelief:
    """
    Build the belief the filter starts from, consuming the first sample of a sequence.

    The mean is the first truth state (``mode="truth"`` and truth available) or the
    back-projection H^+ y_0. The covariance is diagonal, elementwise
    max(diag Q, diag(H^+ R H^+T)), unless ``config.cov_scale`` fixes it to a multiple of I.

    Args:
        model: Validated state-space model
        first_observation: y_0 (length n)
        first_truth: x_0 (length m) or None
        config: Initialisation settings (defaults to :class:`InitConfig`)

    Returns:
        Initial posterior for step 0

    Example:
        >>> initial_belief(model, [1.0, 0.5], None, InitConfig(mode="observation")).mean
        array([1. , 0.5])
    """
    config = config or InitConfig()
    y0 = _observation_vector(first_observation, model.n)
    H_pinv = np.linalg.pinv(model.H)

    if config.mode == "truth" and first_truth is not None:
        mean = np.array(first_truth, dtype=np.float64).reshape(-1)
        if mean.shape != (model.m,):
            raise DimensionMismatchError(
                f"first_truth has shape {mean.shape}, expected ({model.m},)", matrix="x0"
            )
    else:
        mean = H_pinv @ y0

    if config.cov_scale is not None:
        cov = config.cov_scale * np.eye(model.m)
    else:
        back_projected = np.diagonal(H_pinv @ model.R @ H_pinv.T)
        cov = np.diag(np.maximum(np.diagonal(model.Q), back_projected))
    return GaussianBelief(mean=mean, cov=cov)


def steady_state_covariance(model: LinearGaussianModel) -> tuple[FloatArray, FloatArray]:
    """
    Converged prior and posterior covariances of the plain filter.

    Solves the filtering Riccati equation P = F P F^T - F P H^T (H P H^T + R)^-1 H P F^T + Q
    with ``scipy.linalg.solve_discrete_are`` and derives the posterior
    P - P H^T S^-1 H P from it.

    Returns:
        Tuple of (prior covariance, posterior covariance)

    Raises:
        FilterError: If the Riccati solver fails (e.g. an undetectable model).
    """
    try:
        prior = solve_discrete_are(model.F.T, model.H.T, model.Q, model.R)
    except (LinAlgError, ValueError) as exc:
        logger.error(f"Riccati solver failed: {exc}")
        raise FilterError(f"Riccati solver failed: {exc}", matrix="P") from exc
    prior = symmetrize(prior)
    S = model.H @ prior @ model.H.T + model.R
    cross = prior @ model.H.T
    posterior = symmetrize(prior - cross @ solve_innovation(factor_innovation(S), cross.T))
    return prior, posterior
