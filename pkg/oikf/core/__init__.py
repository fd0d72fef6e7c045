"""State-space model, Gaussian beliefs and per-step records."""

from oikf.core.diagnostics import NuvState, StepDiagnostics
from oikf.core.model import (
    PSD_TOLERANCE,
    FloatArray,
    GaussianBelief,
    LinearGaussianModel,
    ObservationPrediction,
    as_readonly,
    check_belief,
    is_psd,
    is_symmetric,
    symmetrize,
    validate_model,
)

__all__ = [
    "PSD_TOLERANCE",
    "FloatArray",
    "GaussianBelief",
    "LinearGaussianModel",
    "NuvState",
    "ObservationPrediction",
    "StepDiagnostics",
    "as_readonly",
    "check_belief",
    "is_psd",
    "is_symmetric",
    "symmetrize",
    "validate_model",
]
