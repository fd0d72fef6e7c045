"""White-noise-acceleration (constant velocity) models and dB helpers."""

from __future__ import annotations

import math
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from oikf.core import FloatArray, LinearGaussianModel, validate_model

__all__ = [
    "WnaSpec",
    "db_to_linear",
    "linear_to_db",
    "wna_model",
    "wna_position_model",
    "POSITION_INDEX",
]

# State layout is (position, velocity).
POSITION_INDEX = 0


def db_to_linear(value_db: float) -> float:
    """
    Convert decibels to a linear power quantity, 10^(dB/10).

    Example:
        >>> db_to_linear(-10.0)
        0.1
    """
    return float(10.0 ** (value_db / 10.0))


def linear_to_db(value: float) -> float:
    """
    Convert a positive linear power quantity to decibels, 10 log10(value).

    Raises:
        ValueError: If ``value`` is not positive.
    """
    if value <= 0.0:
        raise ValueError(f"cannot express non-positive value {value} in dB")
    return 10.0 * math.log10(value)


class WnaSpec(BaseModel):
    """Parameters of a single-axis WNA scenario.

    ``observe="full"`` measures position and velocity (H = I), ``"position"`` only the
    position (H = (1 0)), as a GPS receiver would.
    """

    tau: float = Field(default=1.0, gt=0.0, description="Sampling interval")
    q_sq: float = Field(default=0.1, gt=0.0, description="Process-noise intensity q^2")
    r_sq: float = Field(default=1.0, gt=0.0, description="Observation-noise variance r^2")
    horizon: int = Field(default=2000, ge=1, description="Number of steps T")
    observe: Literal["full", "position"] = Field(
        default="full", description="Observed state components"
    )

    model_config = ConfigDict(frozen=True)

    @classmethod
    def from_db(cls, q_db: float, r_db: float, **kwargs: Any) -> WnaSpec:
        """
        Build a spec from q^2 and r^2 given in dB.

        Example:
            >>> WnaSpec.from_db(q_db=-10.0, r_db=0.0).q_sq
            0.1
        """
        return cls(q_sq=db_to_linear(q_db), r_sq=db_to_linear(r_db), **kwargs)


def _dynamics(spec: WnaSpec) -> tuple[FloatArray, FloatArray]:
    tau = spec.tau
    F = np.array([[1.0, tau], [0.0, 1.0]])
    Q = spec.q_sq * np.array([[tau**3 / 3.0, tau**2 / 2.0], [tau**2 / 2.0, tau]])
    return F, Q


def wna_model(spec: WnaSpec) -> LinearGaussianModel:
    """
    WNA model with F = [[1, tau], [0, 1]] and Q = q^2 [[tau^3/3, tau^2/2], [tau^2/2, tau]].

    With ``observe="full"`` (the synthetic setting) H = I2 and R = r^2 I2; with
    ``observe="position"`` this is :func:`wna_position_model`.

    Example:
        >>> wna_model(WnaSpec(tau=1.0, q_sq=0.1)).F
        array([[1., 1.],
               [0., 1.]])
    """
    if spec.observe == "position":
        return wna_position_model(spec)
    F, Q = _dynamics(spec)
    return validate_model(
        LinearGaussianModel(F=F, H=np.eye(2), Q=Q, R=spec.r_sq * np.eye(2))
    )


def wna_position_model(spec: WnaSpec) -> LinearGaussianModel:
    """WNA dynamics observed through the position only: H = (1 0), R = [[r^2]]."""
    F, Q = _dynamics(spec)
    return validate_model(
        LinearGaussianModel(F=F, H=[[1.0, 0.0]], Q=Q, R=[[spec.r_sq]])
    )
