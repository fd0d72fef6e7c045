# Pytest configuration and fixtures
"""Shared fixtures: small validated models, beliefs and a seeded outlier trajectory."""

import numpy as np
import pytest

from oikf.core import GaussianBelief, LinearGaussianModel, validate_model
from oikf.scenario import OutlierSpec, WnaSpec, generate, wna_model


@pytest.fixture
def scalar_model() -> LinearGaussianModel:
    """Random walk observed directly: F = H = 1, q^2 = 0.1, r^2 = 1."""
    return validate_model(LinearGaussianModel(F=1.0, H=1.0, Q=0.1, R=1.0))


@pytest.fixture
def wna_spec() -> WnaSpec:
    """Default WNA scenario shortened for unit tests."""
    return WnaSpec(tau=1.0, q_sq=0.1, r_sq=1.0, horizon=200)


@pytest.fixture
def wna(wna_spec: WnaSpec) -> LinearGaussianModel:
    """Fully observed WNA model (H = I2)."""
    return wna_model(wna_spec)


@pytest.fixture
def prior_belief() -> GaussianBelief:
    """Two-state belief with a correlated covariance."""
    return GaussianBelief(mean=[1.0, -0.5], cov=[[2.0, 0.3], [0.3, 1.0]])


@pytest.fixture
def outlier_trajectory(wna: LinearGaussianModel, wna_spec: WnaSpec):
    """Seeded trajectory with 20% Rayleigh(30) outliers."""
    return generate(wna, wna_spec, OutlierSpec(prob=0.2, rayleigh_scale=30.0), seed=11)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def error_log():
    """Messages logged at ERROR or above while the test runs."""
    from loguru import logger

    messages: list[str] = []
    sink = logger.add(
        lambda m: messages.append(m.record["message"]), level="ERROR", format="{message}"
    )
    yield messages
    logger.remove(sink)
