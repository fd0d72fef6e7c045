"""Linear-Gaussian state-space model, Gaussian beliefs, and their invariants.

The model is

    x_t = F x_{t-1} + e_t,        e_t ~ N(0, Q)
    y_t = H x_t + z_t + u_t,      z_t ~ N(0, R),  R = diag(r^2)

with ``u_t`` an additive outlier of unknown distribution. All arrays are read-only float64.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Any

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from oikf.exceptions import (
    DimensionMismatchError,
    ModelValidationError,
    NonDiagonalRError,
    NonPsdCovarianceError,
)

if TYPE_CHECKING:
    import numpy.typing as npt

    FloatArray = npt.NDArray[np.float64]
else:
    FloatArray = np.ndarray

__all__ = [
    "FloatArray",
    "PSD_TOLERANCE",
    "LinearGaussianModel",
    "GaussianBelief",
    "ObservationPrediction",
    "as_readonly",
    "symmetrize",
    "is_symmetric",
    "is_psd",
    "validate_model",
    "check_belief",
]

# Relative tolerance for symmetry (Frobenius) and the eigenvalue floor (-tol * trace).
PSD_TOLERANCE = 1e-9


def as_readonly(value: Any, ndim: int) -> FloatArray:
    """Copy ``value`` into a read-only float64 array of rank ``ndim``.

    Scalars are promoted (``[[x]]`` for matrices, ``[x]`` for vectors), which keeps the
    single-axis models terse to write.

    Raises:
        ValueError: If the value cannot be brought to rank ``ndim``.
    """
    arr = np.array(value, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape((1,) * ndim)
    if ndim == 2 and arr.ndim == 1 and arr.size == 1:
        arr = arr.reshape(1, 1)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-D array, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


def symmetrize(cov: FloatArray) -> FloatArray:
    """Return ``(cov + cov^T) / 2``.

    Example:
        >>> symmetrize(np.array([[1.0, 2.0], [0.0, 1.0]]))
        array([[1., 1.],
               [1., 1.]])
    """
    return (cov + cov.T) / 2


def is_symmetric(cov: FloatArray, tol: float = PSD_TOLERANCE) -> bool:
    """Symmetric within ``tol`` relative Frobenius norm (the zero matrix is symmetric)."""
    scale = float(np.linalg.norm(cov))
    if scale == 0.0:
        return True
    return float(np.linalg.norm(cov - cov.T)) <= tol * scale


def is_psd(cov: FloatArray, tol: float = PSD_TOLERANCE) -> bool:
    """Numerically positive semi-definite: smallest eigenvalue >= ``-tol * trace``."""
    if not np.all(np.isfinite(cov)):
        return False
    eigenvalues = np.linalg.eigvalsh(symmetrize(cov))
    floor = -tol * max(float(np.trace(cov)), 0.0)
    return bool(eigenvalues.min() >= floor)


class LinearGaussianModel(BaseModel):
    """Time-invariant linear-Gaussian state-space model (F, H, Q, R).

    Construction only coerces the matrices; call :func:`validate_model` to enforce the
    invariants (shapes, diagonal positive R, PSD Q). Filters assume a validated model.
    """

    F: FloatArray = Field(description="State-evolution matrix (m x m)")
    H: FloatArray = Field(description="Observation matrix (n x m)")
    Q: FloatArray = Field(description="Process-noise covariance (m x m, state units^2)")
    R: FloatArray = Field(
        description="Observation-noise covariance diag(r^2) (n x n, observation units^2)"
    )

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("F", "H", "Q", "R", mode="before")
    @classmethod
    def _coerce_matrix(cls, value: Any) -> FloatArray:
        return as_readonly(value, ndim=2)

    @property
    def m(self) -> int:
        """State dimension."""
        return int(self.F.shape[0])

    @property
    def n(self) -> int:
        """Observation dimension."""
        return int(self.H.shape[0])

    @property
    def r_sq(self) -> FloatArray:
        """Nominal per-dimension observation-noise variances diag(R)."""
        return np.diagonal(self.R)

    def with_noise(
        self, *, q_scale: float | None = None, r_sq: float | FloatArray | None = None
    ) -> LinearGaussianModel:
        """
        Return a validated copy with Q scaled and/or the diagonal of R replaced.

        Args:
            q_scale: Multiplier applied to Q (e.g. a new q^2 over the old one)
            r_sq: New nominal observation variance, scalar (all dimensions) or length n

        Returns:
            New validated model

        Example:
            >>> loud = model.with_noise(r_sq=100.0)
        """
        Q = self.Q * q_scale if q_scale is not None else self.Q
        R = self.R
        if r_sq is not None:
            R = np.diag(np.broadcast_to(np.asarray(r_sq, dtype=np.float64), (self.n,)))
        return validate_model(LinearGaussianModel(F=self.F, H=self.H, Q=Q, R=R))


class GaussianBelief(BaseModel):
    """Mean and covariance of a state estimate (prior or posterior)."""

    mean: FloatArray = Field(description="State mean (length m)")
    cov: FloatArray = Field(description="State covariance (m x m)")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("mean", mode="before")
    @classmethod
    def _coerce_mean(cls, value: Any) -> FloatArray:
        return as_readonly(value, ndim=1)

    @field_validator("cov", mode="before")
    @classmethod
    def _coerce_cov(cls, value: Any) -> FloatArray:
        return as_readonly(value, ndim=2)

    @model_validator(mode="after")
    def _check_invariants(self) -> GaussianBelief:
        m = self.mean.shape[0]
        if self.cov.shape != (m, m):
            raise ValueError(f"cov shape {self.cov.shape} does not match mean length {m}")
        if not is_symmetric(self.cov) or not is_psd(self.cov):
            raise ValueError("cov must be symmetric positive semi-definite")
        return self

    @classmethod
    def unchecked(cls, mean: FloatArray, cov: FloatArray) -> GaussianBelief:
        """Wrap arrays produced by filter arithmetic without re-validating them.

        Used on the per-step hot path; the arithmetic (predict/update with symmetrization)
        preserves the invariants that the public constructor checks.
        """
        mean.flags.writeable = False
        cov.flags.writeable = False
        return cls.model_construct(mean=mean, cov=cov)


class ObservationPrediction(BaseModel):
    """Predicted observation mean and innovation covariance S."""

    mean: FloatArray = Field(description="Predicted observation (length n)")
    cov: FloatArray = Field(description="Innovation covariance S (n x n)")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("mean", mode="before")
    @classmethod
    def _coerce_mean(cls, value: Any) -> FloatArray:
        return as_readonly(value, ndim=1)

    @field_validator("cov", mode="before")
    @classmethod
    def _coerce_cov(cls, value: Any) -> FloatArray:
        return as_readonly(value, ndim=2)

    @classmethod
    def unchecked(cls, mean: FloatArray, cov: FloatArray) -> ObservationPrediction:
        """Hot-path constructor, see :meth:`GaussianBelief.unchecked`."""
        mean.flags.writeable = False
        cov.flags.writeable = False
        return cls.model_construct(mean=mean, cov=cov)


def _require_shape(name: str, arr: FloatArray, shape: tuple[int, int]) -> None:
    if arr.shape != shape:
        message = f"{name} has shape {arr.shape}, expected {shape}"
        logger.error(message)
        raise DimensionMismatchError(message, matrix=name)


def validate_model(model: LinearGaussianModel) -> LinearGaussianModel:
    """
    Check every model invariant and return the model unchanged.

    Validation is idempotent: a validated model passes again and the same object is returned.

    Args:
        model: Model to check

    Returns:
        ``model`` itself

    Raises:
        DimensionMismatchError: F not square, or H/Q/R inconsistent with (m, n).
        NonDiagonalRError: R has a non-zero off-diagonal entry.
        NonPsdCovarianceError: R has a non-positive diagonal entry, or Q is asymmetric or
            not positive semi-definite.
        ModelValidationError: A matrix contains NaN or infinity.

    Example:
        >>> model = LinearGaussianModel(F=np.eye(2), H=np.eye(2), Q=0.1 * np.eye(2), R=np.eye(2))
        >>> validate_model(model) is model
        True
    """
    F, H, Q, R = model.F, model.H, model.Q, model.R
    if F.shape[0] != F.shape[1]:
        message = f"F must be square, got shape {F.shape}"
        logger.error(message)
        raise DimensionMismatchError(message, matrix="F")
    m = F.shape[0]
    n = H.shape[0]
    _require_shape("H", H, (n, m))
    _require_shape("Q", Q, (m, m))
    _require_shape("R", R, (n, n))

    for name, matrix in (("F", F), ("H", H), ("Q", Q), ("R", R)):
        if not np.all(np.isfinite(matrix)):
            message = f"{name} contains non-finite entries"
            logger.error(message)
            raise ModelValidationError(message, matrix=name)

    diagonal = np.diagonal(R)
    if np.any(R - np.diag(diagonal) != 0.0):
        message = "R must be diagonal (R = diag(r^2)); full observation covariances are rejected"
        logger.error(message)
        raise NonDiagonalRError(message, matrix="R")
    if np.any(diagonal <= 0.0):
        message = f"R must have a strictly positive diagonal, got {diagonal.tolist()}"
        logger.error(message)
        raise NonPsdCovarianceError(message, matrix="R")

    if not is_symmetric(Q):
        message = "Q is not symmetric"
        logger.error(message)
        raise NonPsdCovarianceError(message, matrix="Q")
    if not is_psd(Q):
        message = "Q is not positive semi-definite"
        logger.error(message)
        raise NonPsdCovarianceError(message, matrix="Q")

    logger.debug(f"Validated model (m={m}, n={n})")
    return model


def check_belief(belief: GaussianBelief, m: int, *, name: str = "belief") -> GaussianBelief:
    """
    Enforce the belief invariants against a model's state dimension.

    Args:
        belief: Belief to check (possibly built with :meth:`GaussianBelief.unchecked`)
        m: Expected state dimension
        name: Label used in error messages

    Returns:
        ``belief`` itself

    Raises:
        DimensionMismatchError: Mean or covariance does not have dimension m.
        NonPsdCovarianceError: Covariance is asymmetric or not PSD within tolerance.
    """
    if belief.mean.shape != (m,):
        message = f"{name}.mean has shape {belief.mean.shape}, expected ({m},)"
        logger.error(message)
        raise DimensionMismatchError(message, matrix=f"{name}.mean")
    if belief.cov.shape != (m, m):
        message = f"{name}.cov has shape {belief.cov.shape}, expected ({m}, {m})"
        logger.error(message)
        raise DimensionMismatchError(message, matrix=f"{name}.cov")
    if not is_symmetric(belief.cov) or not is_psd(belief.cov):
        message = f"{name}.cov is not symmetric positive semi-definite"
        logger.error(message)
        raise NonPsdCovarianceError(message, matrix=f"{name}.cov")
    return belief
