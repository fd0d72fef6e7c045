"""Kalman, outlier-insensitive and chi-square gated filters."""

from oikf.filters.chi2 import Chi2Config, chi2_gated_step, chi2_quantile, chi2_statistic
from oikf.filters.kalman import (
    InitConfig,
    KalmanGain,
    gain,
    initial_belief,
    kf_step,
    predict,
    predict_observation,
    steady_state_covariance,
    update,
)
from oikf.filters.nuv import estimate_outlier, nuv_am_update, nuv_em_update
from oikf.filters.outlier_insensitive import OikfConfig, oikf_step
from oikf.filters.runner import FILTER_KINDS, FilterKind, FilterRun, make_step, run_filter

__all__ = [
    "FILTER_KINDS",
    "Chi2Config",
    "FilterKind",
    "FilterRun",
    "InitConfig",
    "KalmanGain",
    "OikfConfig",
    "chi2_gated_step",
    "chi2_quantile",
    "chi2_statistic",
    "estimate_outlier",
    "gain",
    "initial_belief",
    "kf_step",
    "make_step",
    "nuv_am_update",
    "nuv_em_update",
    "oikf_step",
    "predict",
    "predict_observation",
    "run_filter",
    "steady_state_covariance",
    "update",
]
