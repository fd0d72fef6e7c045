"""oikf - Outlier-Insensitive Kalman Filtering.

A Kalman filter that treats each observation component as carrying a possible outlier of
unknown variance (normal with unknown variance, NUV), estimated online per step by
expectation-maximization (EM) or alternating maximization (AM). Ships with a plain Kalman
filter, a chi-square innovation gate baseline, a white-noise-acceleration scenario generator,
a trajectory CSV loader and a Monte Carlo benchmark harness (``oikf-bench``).

Every filter step is a pure function ``(model, posterior, y) -> (posterior, diagnostics)``;
with no outliers estimated the outlier-insensitive step reproduces the Kalman step exactly.

Usage:
    >>> import numpy as np
    >>> from oikf import OikfConfig, OutlierSpec, WnaSpec, generate, initial_belief
    >>> from oikf import make_step, run_filter, wna_model
    >>>
    >>> spec = WnaSpec.from_db(q_db=-10.0, r_db=0.0, horizon=500)
    >>> model = wna_model(spec)
    >>> data = generate(model, spec, OutlierSpec(prob=0.2), seed=7)
    >>> start = initial_belief(model, data.observations[0], data.states[0])
    >>> run = run_filter(model, data.observations[1:], start, make_step("oikf-em", OikfConfig()))
    >>> print(f"flagged {run.detection_count} outlier components")
"""

__version__ = "0.1.0"
__author__ = "batt"
__license__ = "MIT"

from oikf.core import (
    GaussianBelief,
    LinearGaussianModel,
    NuvState,
    ObservationPrediction,
    StepDiagnostics,
    validate_model,
)
from oikf.data import DatasetSchema, TrajectoryDataset, load_csv
from oikf.exceptions import (
    DatasetError,
    FilterError,
    ModelValidationError,
    NegativeSecondMomentError,
    SingularInnovationError,
)
from oikf.filters import (
    Chi2Config,
    FilterKind,
    FilterRun,
    InitConfig,
    OikfConfig,
    chi2_gated_step,
    initial_belief,
    kf_step,
    make_step,
    oikf_step,
    run_filter,
)
from oikf.scenario import OutlierSpec, Trajectory, WnaSpec, generate, wna_model
from oikf.utils.logging import setup_logger

__all__ = [
    # Version info
    "__version__",
    "__author__",
    "__license__",
    # Filter steps
    "kf_step",
    "oikf_step",
    "chi2_gated_step",
    "initial_belief",
    "make_step",
    "run_filter",
    "OikfConfig",
    "Chi2Config",
    "InitConfig",
    "FilterKind",
    "FilterRun",
    # Model types
    "LinearGaussianModel",
    "GaussianBelief",
    "ObservationPrediction",
    "NuvState",
    "StepDiagnostics",
    "validate_model",
    # Scenario and data
    "WnaSpec",
    "OutlierSpec",
    "Trajectory",
    "generate",
    "wna_model",
    "DatasetSchema",
    "TrajectoryDataset",
    "load_csv",
    # Utilities
    "setup_logger",
    # Exceptions
    "ModelValidationError",
    "FilterError",
    "SingularInnovationError",
    "NegativeSecondMomentError",
    "DatasetError",
]
