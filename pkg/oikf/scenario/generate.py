"""Seeded trajectory simulation with Bernoulli/Rayleigh outlier injection."""

from __future__ import annotations

from typing import Any, Literal

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from oikf.core import FloatArray, LinearGaussianModel, as_readonly
from oikf.core.diagnostics import BoolArray
from oikf.scenario.wna import WnaSpec

__all__ = ["OutlierSpec", "Trajectory", "generate"]


class OutlierSpec(BaseModel):
    """Impulsive outlier law: each (t, k) entry is hit with probability ``prob``.

    Magnitudes are Rayleigh(``rayleigh_scale``); ``sign_mode="random_sign"`` flips each one
    with probability 1/2, ``"positive"`` keeps them all positive.
    """

    prob: float = Field(default=0.2, ge=0.0, le=1.0, description="Bernoulli probability p")
    rayleigh_scale: float = Field(default=30.0, gt=0.0, description="Rayleigh scale beta")
    sign_mode: Literal["random_sign", "positive"] = Field(
        default="random_sign", description="Outlier sign law"
    )

    model_config = ConfigDict(frozen=True)


class Trajectory(BaseModel):
    """Ground truth, observations and the injected outliers of one simulated run."""

    states: FloatArray = Field(description="Ground-truth states (T x m)")
    observations: FloatArray = Field(description="Observations (T x n)")
    outlier_mask: BoolArray = Field(description="Where outliers were injected (T x n)")
    outlier_values: FloatArray = Field(description="Injected outliers, 0 off the mask (T x n)")
    times: FloatArray = Field(description="Sample times t * tau (T)")
    model: LinearGaussianModel = Field(description="Model the data was generated from")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("states", "observations", "outlier_values", mode="before")
    @classmethod
    def _coerce_matrix(cls, value: Any) -> FloatArray:
        return as_readonly(value, ndim=2)

    @field_validator("times", mode="before")
    @classmethod
    def _coerce_times(cls, value: Any) -> FloatArray:
        return as_readonly(value, ndim=1)

    @field_validator("outlier_mask", mode="before")
    @classmethod
    def _coerce_mask(cls, value: Any) -> BoolArray:
        mask = np.array(value, dtype=bool)
        mask.flags.writeable = False
        return mask

    @model_validator(mode="after")
    def _check_shapes(self) -> Trajectory:
        steps = self.states.shape[0]
        expected = (steps, self.model.n)
        for name in ("observations", "outlier_mask", "outlier_values"):
            if getattr(self, name).shape != expected:
                shape = getattr(self, name).shape
                raise ValueError(f"{name} has shape {shape}, expected {expected}")
        if self.times.shape != (steps,):
            raise ValueError(f"times has shape {self.times.shape}, expected ({steps},)")
        if np.any(self.outlier_values[~self.outlier_mask] != 0.0):
            raise ValueError("outlier_values must be zero where outlier_mask is False")
        return self

    @property
    def horizon(self) -> int:
        """Number of samples T."""
        return int(self.states.shape[0])

    @property
    def clean_observations(self) -> FloatArray:
        """Observations with the injected outliers removed."""
        return self.observations - self.outlier_values


def generate(
    model: LinearGaussianModel, wna: WnaSpec, outliers: OutlierSpec, seed: int
) -> Trajectory:
    """
    Simulate x_t = F x_{t-1} + e_t, y_t = H x_t + z_t + u_t for ``wna.horizon`` steps.

    The random stream is consumed in a fixed order (process noise, observation noise,
    Bernoulli mask, Rayleigh magnitudes, signs), every array drawn in full, so the clean
    data for a seed does not depend on ``outliers``. The state starts from x_{-1} = 0.

    Args:
        model: Model to simulate (usually :func:`wna_model` of ``wna``)
        wna: Supplies the horizon and sampling interval
        outliers: Outlier law
        seed: Seed for ``numpy.random.default_rng``

    Returns:
        Trajectory; bitwise reproducible for equal arguments

    Example:
        >>> spec = WnaSpec.from_db(q_db=-10.0, r_db=0.0, horizon=500)
        >>> traj = generate(wna_model(spec), spec, OutlierSpec(prob=0.2), seed=7)
        >>> traj.observations.shape
        (500, 2)
    """
    rng = np.random.default_rng(seed)
    steps, m, n = wna.horizon, model.m, model.n

    process = rng.multivariate_normal(np.zeros(m), model.Q, size=steps)
    noise = rng.standard_normal((steps, n)) * np.sqrt(model.r_sq)
    mask = rng.random((steps, n)) < outliers.prob
    magnitudes = rng.rayleigh(scale=outliers.rayleigh_scale, size=(steps, n))
    flips = rng.random((steps, n)) < 0.5

    if outliers.sign_mode == "random_sign":
        magnitudes = np.where(flips, -magnitudes, magnitudes)
    outlier_values = np.where(mask, magnitudes, 0.0)

    states = np.empty((steps, m))
    state = np.zeros(m)
    for t in range(steps):
        state = model.F @ state + process[t]
        states[t] = state
    observations = states @ model.H.T + noise + outlier_values

    logger.debug(
        f"Generated trajectory (T={steps}, seed={seed}, outliers={int(mask.sum())}/{mask.size})"
    )
    return Trajectory(
        states=states,
        observations=observations,
        outlier_mask=mask,
        outlier_values=outlier_values,
        times=np.arange(steps) * wna.tau,
        model=model,
    )
