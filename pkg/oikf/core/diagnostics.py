"""Per-step records shared by every filter: the NUV state and step diagnostics."""

from __future__ import annotations

from typing import TYPE_CHECKING, Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from oikf.core.model import FloatArray, as_readonly

if TYPE_CHECKING:
    import numpy.typing as npt

    BoolArray = npt.NDArray[np.bool_]
    IntArray = npt.NDArray[np.int64]
else:
    BoolArray = np.ndarray
    IntArray = np.ndarray

__all__ = ["BoolArray", "IntArray", "NuvState", "StepDiagnostics"]


class NuvState(BaseModel):
    """Estimated outlier variances and the inflated observation covariance they induce.

    ``nu_sq = r^2 + gamma_sq`` and ``inflated_cov = diag(nu_sq)``; :meth:`from_gamma` is the
    only constructor used by the filters, so both relations hold exactly.
    """

    gamma_sq: FloatArray = Field(description="Estimated outlier variances (length n, >= 0)")
    nu_sq: FloatArray = Field(description="Total per-dimension observation variances")
    inflated_cov: FloatArray = Field(description="diag(nu_sq), used in place of R")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("gamma_sq", "nu_sq", mode="before")
    @classmethod
    def _coerce_vector(cls, value: Any) -> FloatArray:
        return as_readonly(value, ndim=1)

    @field_validator("inflated_cov", mode="before")
    @classmethod
    def _coerce_matrix(cls, value: Any) -> FloatArray:
        return as_readonly(value, ndim=2)

    @classmethod
    def from_gamma(cls, gamma_sq: FloatArray, r_sq: FloatArray) -> NuvState:
        """Build the state for ``gamma_sq`` on top of nominal variances ``r_sq``.

        Example:
            >>> NuvState.from_gamma(np.array([16.0]), np.array([9.0])).inflated_cov
            array([[25.]])
        """
        nu_sq = r_sq + gamma_sq
        inflated = np.diag(nu_sq)
        gamma_sq = np.array(gamma_sq, dtype=np.float64)
        for arr in (gamma_sq, nu_sq, inflated):
            arr.flags.writeable = False
        return cls.model_construct(gamma_sq=gamma_sq, nu_sq=nu_sq, inflated_cov=inflated)


class StepDiagnostics(BaseModel):
    """What one filter step did: innovation, outlier estimates, iterations and timing."""

    innovation: FloatArray = Field(description="Innovation y - H x_prior (length n)")
    gamma_sq_final: FloatArray = Field(description="Final outlier variances (zeros for KF)")
    iterations_used: int = Field(ge=1, description="Inner NUV iterations run (1 for KF/chi2)")
    outlier_detected: BoolArray = Field(description="Boolean vector, gamma_sq_final > 0")
    elapsed: float = Field(ge=0.0, description="Wall-clock seconds spent in the step")
    outlier_estimate: FloatArray = Field(description="MAP outlier estimate u (zeros for KF)")
    nuv: NuvState | None = Field(default=None, description="Final NUV state (OIKF only)")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("innovation", "gamma_sq_final", "outlier_estimate", mode="before")
    @classmethod
    def _coerce_vector(cls, value: Any) -> FloatArray:
        return as_readonly(value, ndim=1)

    @field_validator("outlier_detected", mode="before")
    @classmethod
    def _coerce_mask(cls, value: Any) -> BoolArray:
        mask = np.array(value, dtype=bool).reshape(-1)
        mask.flags.writeable = False
        return mask

    @classmethod
    def nominal(
        cls,
        innovation: FloatArray,
        elapsed: float,
        *,
        detected: bool = False,
    ) -> StepDiagnostics:
        """Diagnostics for a step with no outlier variance estimate (KF and chi2 gate).

        ``detected`` flags every dimension, used by the chi2 gate when it discards the
        whole observation vector.
        """
        zeros = np.zeros_like(innovation)
        zeros.flags.writeable = False
        mask = np.full(innovation.shape, detected, dtype=bool)
        mask.flags.writeable = False
        innovation.flags.writeable = False
        return cls.model_construct(
            innovation=innovation,
            gamma_sq_final=zeros,
            iterations_used=1,
            outlier_detected=mask,
            elapsed=elapsed,
            outlier_estimate=zeros,
            nuv=None,
        )
