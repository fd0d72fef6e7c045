"""Outlier-variance estimators for the NUV observation model.

Each observation dimension k carries an unknown outlier variance gamma_k^2 on top of the
nominal r_k^2. Both estimators work per dimension and clamp at zero, which is what makes the
outlier-insensitive filter coincide with the plain Kalman filter whenever the residual is
explained by the nominal noise.
"""

from __future__ import annotations

import numpy as np
from loguru import logger

from oikf.core import FloatArray, LinearGaussianModel
from oikf.exceptions import NegativeSecondMomentError
from oikf.filters.constants import EM_NEGATIVE_TOLERANCE

__all__ = [
    "nuv_am_update",
    "nuv_em_update",
    "em_second_moment",
    "estimate_outlier",
]


def nuv_am_update(residual: FloatArray, r_sq: FloatArray) -> FloatArray:
    """
    Alternating-maximization estimate gamma^2 = max(v^2 - r^2, 0), elementwise.

    The result is exactly 0 or exactly ``v**2 - r_sq`` in every entry.

    Args:
        residual: y - H x for the current state estimate (length n)
        r_sq: Nominal observation variances (length n, > 0)

    Returns:
        Estimated outlier variances (length n)

    Example:
        >>> nuv_am_update(np.array([5.0, 1.0]), np.array([9.0, 9.0]))
        array([16.,  0.])
    """
    return np.maximum(residual * residual - r_sq, 0.0)


def em_second_moment(
    y: FloatArray,
    model: LinearGaussianModel,
    posterior_mean: FloatArray,
    posterior_cov: FloatArray,
) -> FloatArray:
    """
    Diagonal of E[(y - Hx)(y - Hx)^T] under x ~ N(posterior_mean, posterior_cov).

    Expanding y y^T - H x y^T - y x^T H^T + H (cov + x x^T) H^T, the diagonal is
    (y - H x)_k^2 + (H cov H^T)_kk; the second form is used since it does not cancel
    large terms when the state is far from the origin.

    Raises:
        NegativeSecondMomentError: If any entry is below ``-EM_NEGATIVE_TOLERANCE``, which
            only happens when ``posterior_cov`` is not PSD.
    """
    H = model.H
    residual = y - H @ posterior_mean
    spread = np.einsum("ij,jk,ik->i", H, posterior_cov, H)
    second = residual * residual + spread
    if np.any(second < -EM_NEGATIVE_TOLERANCE):
        logger.error(f"EM second moment is negative: {second.tolist()}")
        raise NegativeSecondMomentError(
            f"EM residual second moment is negative ({float(second.min()):.3e})",
            matrix="nu_sq",
        )
    return np.maximum(second, 0.0)


def nuv_em_update(
    y: FloatArray,
    model: LinearGaussianModel,
    posterior_mean: FloatArray,
    posterior_cov: FloatArray,
    r_sq: FloatArray,
) -> FloatArray:
    """
    Expectation-maximization estimate gamma^2 = max(nu^2 - r^2, 0) from posterior moments.

    Args:
        y: Observation (length n)
        model: State-space model (only H is used)
        posterior_mean: Current state mean (length m)
        posterior_cov: Current state covariance (m x m, PSD)
        r_sq: Nominal observation variances (length n, > 0)

    Returns:
        Estimated outlier variances (length n)

    Raises:
        NegativeSecondMomentError: See :func:`em_second_moment`.

    Example:
        >>> model = LinearGaussianModel(F=[[1.0]], H=[[1.0]], Q=[[0.1]], R=[[9.0]])
        >>> nuv_em_update(np.array([5.0]), model, np.zeros(1), np.zeros((1, 1)), model.r_sq)
        array([16.])
    """
    nu_sq = em_second_moment(y, model, posterior_mean, posterior_cov)
    return np.maximum(nu_sq - r_sq, 0.0)


def estimate_outlier(residual: FloatArray, gamma_sq: FloatArray, r_sq: FloatArray) -> FloatArray:
    """
    MAP estimate of the outlier itself, u = v gamma^2 / (gamma^2 + r^2).

    Entries with gamma^2 = 0 are exactly 0; the sign follows the residual.

    Example:
        >>> estimate_outlier(np.array([-10.0]), np.array([91.0]), np.array([9.0]))
        array([-9.1])
    """
    shrink = np.divide(
        gamma_sq, gamma_sq + r_sq, out=np.zeros_like(gamma_sq), where=gamma_sq > 0.0
    )
    return np.where(gamma_sq > 0.0, residual * shrink, 0.0)
