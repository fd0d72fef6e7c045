"""Tests for the NUV outlier-variance estimators."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from oikf.core import LinearGaussianModel, validate_model
from oikf.exceptions import FilterError, NegativeSecondMomentError
from oikf.filters.nuv import (
    em_second_moment,
    estimate_outlier,
    nuv_am_update,
    nuv_em_update,
)

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)
positive = st.floats(min_value=1e-3, max_value=1e3)


@pytest.fixture
def r9_model() -> LinearGaussianModel:
    return validate_model(LinearGaussianModel(F=1.0, H=1.0, Q=0.1, R=9.0))


class TestAmUpdate:
    """Tests for nuv_am_update."""

    def test_values(self) -> None:
        assert_array_equal(nuv_am_update(np.array([5.0, 1.0]), np.array([9.0, 9.0])), [16.0, 0.0])

    def test_sign_of_residual_irrelevant(self) -> None:
        assert_array_equal(nuv_am_update(np.array([-5.0]), np.array([9.0])), [16.0])

    @settings(max_examples=100, deadline=None)
    @given(residual=finite, r_sq=positive)
    def test_exactly_zero_or_excess(self, residual: float, r_sq: float) -> None:
        gamma = nuv_am_update(np.array([residual]), np.array([r_sq]))[0]
        assert gamma >= 0.0
        assert gamma == 0.0 or gamma == residual * residual - r_sq


class TestEmUpdate:
    """Tests for em_second_moment and nuv_em_update."""

    def test_point_mass_matches_am(self, r9_model) -> None:
        gamma = nuv_em_update(np.array([5.0]), r9_model, np.zeros(1), np.zeros((1, 1)), r9_model.r_sq)
        assert_array_equal(gamma, [16.0])

    def test_covariance_adds_spread(self, r9_model) -> None:
        second = em_second_moment(np.array([5.0]), r9_model, np.zeros(1), np.array([[4.0]]))
        assert_allclose(second, [29.0])

    def test_far_from_origin_does_not_cancel(self, r9_model) -> None:
        offset = 1e8
        second = em_second_moment(
            np.array([offset + 3.0]), r9_model, np.array([offset]), np.array([[0.5]])
        )
        assert_allclose(second, [9.5])

    def test_multi_dimensional_diagonal(self) -> None:
        model = validate_model(
            LinearGaussianModel(F=np.eye(2), H=[[1.0, 1.0], [0.0, 2.0]], Q=np.eye(2), R=np.eye(2))
        )
        cov = np.array([[1.0, 0.5], [0.5, 2.0]])
        second = em_second_moment(np.zeros(2), model, np.zeros(2), cov)
        assert_allclose(second, np.diagonal(model.H @ cov @ model.H.T))

    def test_non_psd_covariance_raises(self, r9_model) -> None:
        with pytest.raises(NegativeSecondMomentError) as info:
            em_second_moment(np.zeros(1), r9_model, np.zeros(1), np.array([[-5.0]]))
        assert isinstance(info.value, FilterError)
        assert info.value.matrix == "nu_sq"

    def test_roundoff_negative_clamped(self, r9_model) -> None:
        second = em_second_moment(np.zeros(1), r9_model, np.zeros(1), np.array([[-1e-12]]))
        assert_array_equal(second, [0.0])

    @settings(max_examples=100, deadline=None)
    @given(residual=finite, spread=st.floats(min_value=0.0, max_value=1e3), r_sq=positive)
    def test_em_never_below_am(self, residual: float, spread: float, r_sq: float) -> None:
        model = validate_model(LinearGaussianModel(F=1.0, H=1.0, Q=0.1, R=r_sq))
        em = nuv_em_update(np.array([residual]), model, np.zeros(1), np.array([[spread]]), model.r_sq)
        am = nuv_am_update(np.array([residual]), model.r_sq)
        assert em[0] >= am[0]


class TestEstimateOutlier:
    """Tests for estimate_outlier."""

    def test_shrinkage(self) -> None:
        assert_allclose(estimate_outlier(np.array([-10.0]), np.array([91.0]), np.array([9.0])), [-9.1])

    def test_zero_variance_gives_exact_zero(self) -> None:
        u = estimate_outlier(np.array([3.0, 40.0]), np.array([0.0, 1591.0]), np.array([9.0, 9.0]))
        assert u[0] == 0.0
        assert_allclose(u[1], 40.0 * 1591.0 / 1600.0)

    def test_large_variance_recovers_residual(self) -> None:
        u = estimate_outlier(np.array([100.0]), np.array([1e9]), np.array([1.0]))
        assert_allclose(u, [100.0], rtol=1e-8)


class TestOracles:
    """Estimators against brute-force references."""

    def test_am_matches_likelihood_grid_search(self) -> None:
        rng = np.random.default_rng(2)
        for residual, r_sq in zip(rng.normal(0.0, 5.0, 200), rng.uniform(0.1, 10.0, 200)):
            step = 1e-3 * max(residual**2, r_sq)
            grid = np.arange(0.0, 10.0 * (residual**2 + r_sq), step)
            variance = r_sq + grid
            log_likelihood = -0.5 * np.log(variance) - residual**2 / (2.0 * variance)
            best = grid[np.argmax(log_likelihood)]
            am = nuv_am_update(np.array([residual]), np.array([r_sq]))[0]
            assert abs(am - best) <= step

    def test_em_matches_sampled_second_moment(self) -> None:
        rng = np.random.default_rng(5)
        for _ in range(20):
            H = rng.normal(size=(2, 2))
            root = rng.normal(size=(2, 2))
            cov = root @ root.T
            mean = rng.normal(0.0, 3.0, 2)
            y = rng.normal(0.0, 3.0, 2)
            model = LinearGaussianModel(F=np.eye(2), H=H, Q=np.eye(2), R=np.eye(2))
            samples = rng.multivariate_normal(mean, cov, size=100_000)
            squared = (y - samples @ H.T) ** 2
            standard_error = squared.std(axis=0) / np.sqrt(len(samples))
            moment = em_second_moment(y, model, mean, cov)
            assert np.all(moment >= 0.0)
            assert np.all(np.abs(moment - squared.mean(axis=0)) <= 4.0 * standard_error)
