"""Tests for the outlier-insensitive step."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal
from pydantic import ValidationError

from oikf.core import GaussianBelief, LinearGaussianModel, is_psd, validate_model
from oikf.filters.kalman import kf_step, predict
from oikf.filters.outlier_insensitive import OikfConfig, oikf_step, relative_change

observation = st.floats(min_value=-50.0, max_value=50.0, allow_nan=False)


class TestOikfConfig:
    """Tests for OikfConfig."""

    def test_defaults(self) -> None:
        config = OikfConfig()
        assert (config.max_iters, config.method, config.gamma_init) == (10, "EM", "prior_residual")

    def test_method_case_insensitive(self) -> None:
        assert OikfConfig(method="am").method == "AM"

    @pytest.mark.parametrize("kwargs", [{"max_iters": 0}, {"conv_tol": -1.0}, {"method": "VB"}])
    def test_invalid(self, kwargs) -> None:
        with pytest.raises(ValidationError):
            OikfConfig(**kwargs)


class TestRelativeChange:
    """Tests for relative_change."""

    def test_both_zero(self) -> None:
        assert relative_change(np.zeros(2), np.zeros(2)) == 0.0

    def test_linf_ratio(self) -> None:
        assert relative_change(np.array([4.0, 0.0]), np.array([5.0, 0.0])) == pytest.approx(0.2)

    def test_from_zero_is_one(self) -> None:
        assert relative_change(np.zeros(1), np.array([3.0])) == 1.0


class TestOikfStep:
    """Tests for oikf_step."""

    @pytest.mark.parametrize("method", ["EM", "AM"])
    def test_large_outlier_rejected(self, scalar_model, method: str) -> None:
        posterior = GaussianBelief(mean=[0.0], cov=[[1.0]])
        belief, diag = oikf_step(scalar_model, posterior, [100.0], OikfConfig(method=method))
        kf_belief, _ = kf_step(scalar_model, posterior, [100.0])
        assert abs(belief.mean[0]) < 0.1
        assert kf_belief.mean[0] > 50.0
        assert diag.outlier_detected[0]
        assert diag.gamma_sq_final[0] > 9000.0
        assert_allclose(diag.outlier_estimate, [100.0], atol=0.1)
        assert diag.nuv is not None
        assert_array_equal(diag.nuv.gamma_sq, diag.gamma_sq_final)

    def test_per_dimension_detection(self, wna, prior_belief) -> None:
        y = np.array([1.0, 80.0])
        belief, diag = oikf_step(wna, prior_belief, y, OikfConfig(method="AM"))
        assert_array_equal(diag.outlier_detected, [False, True])
        assert diag.outlier_estimate[0] == 0.0
        assert is_psd(belief.cov)

    def test_single_iteration_zero_init_matches_kf_bitwise(self, wna, prior_belief) -> None:
        y = np.array([40.0, -25.0])
        config = OikfConfig(max_iters=1, gamma_init="zero")
        belief, diag = oikf_step(wna, prior_belief, y, config)
        kf_belief, kf_diag = kf_step(wna, prior_belief, y)
        assert_array_equal(belief.mean, kf_belief.mean)
        assert_array_equal(belief.cov, kf_belief.cov)
        assert_array_equal(diag.innovation, kf_diag.innovation)
        assert diag.iterations_used == 1

    @settings(max_examples=60, deadline=None)
    @given(y=observation)
    def test_clean_am_step_matches_kf_bitwise(self, y: float) -> None:
        model = validate_model(LinearGaussianModel(F=1.0, H=1.0, Q=0.1, R=1.0))
        posterior = GaussianBelief(mean=[0.0], cov=[[0.2]])
        belief, diag = oikf_step(model, posterior, [y], OikfConfig(method="AM"))
        if diag.gamma_sq_final[0] == 0.0:
            kf_belief, _ = kf_step(model, posterior, [y])
            assert_array_equal(belief.mean, kf_belief.mean)
            assert_array_equal(belief.cov, kf_belief.cov)
            assert not diag.outlier_detected[0]

    def test_small_residual_leaves_gamma_zero(self, scalar_model) -> None:
        posterior = GaussianBelief(mean=[0.0], cov=[[0.2]])
        belief, diag = oikf_step(scalar_model, posterior, [0.5], OikfConfig(method="AM"))
        kf_belief, _ = kf_step(scalar_model, posterior, [0.5])
        assert diag.iterations_used == 1
        assert_array_equal(belief.mean, kf_belief.mean)

    def test_iterations_bounded(self, wna, prior_belief) -> None:
        config = OikfConfig(max_iters=3, conv_tol=0.0)
        _, diag = oikf_step(wna, prior_belief, [60.0, -70.0], config)
        assert 1 <= diag.iterations_used <= 3

    def test_converges_before_cap(self, scalar_model) -> None:
        posterior = GaussianBelief(mean=[0.0], cov=[[1.0]])
        _, diag = oikf_step(scalar_model, posterior, [100.0], OikfConfig(max_iters=50))
        assert diag.iterations_used < 50

    def test_gamma_init_zero_still_detects(self, scalar_model) -> None:
        posterior = GaussianBelief(mean=[0.0], cov=[[1.0]])
        belief, diag = oikf_step(
            scalar_model, posterior, [100.0], OikfConfig(gamma_init="zero", method="AM")
        )
        assert diag.outlier_detected[0]
        assert diag.iterations_used > 1
        assert abs(belief.mean[0]) < 1.0

    def test_posterior_not_worse_than_prior_covariance(self, wna, prior_belief) -> None:
        belief, _ = oikf_step(wna, prior_belief, [200.0, 200.0])
        prior = predict(wna, prior_belief)
        assert np.trace(belief.cov) <= np.trace(prior.cov)


class TestInnerLoopFixedPoints:
    """Where the iterated NUV update settles for one scalar observation.

    The scalar fixture with a posterior variance of 0.9 gives a predicted observation
    variance p = 1 and r^2 = 1, so the innovation spread is S = p + r^2 = 2.
    """

    POSTERIOR = GaussianBelief(mean=[0.0], cov=[[0.9]])
    CONVERGED = {"max_iters": 500, "conv_tol": 0.0}

    def test_em_settles_on_marginal_likelihood_maximum(self, scalar_model) -> None:
        # gamma^2 = e^2 - p - r^2 maximizes N(e; 0, p + r^2 + gamma^2)
        belief, diag = oikf_step(
            scalar_model, self.POSTERIOR, [4.0], OikfConfig(method="EM", **self.CONVERGED)
        )
        assert diag.gamma_sq_final[0] == pytest.approx(14.0, rel=1e-9)
        assert belief.mean[0] == pytest.approx(0.25, rel=1e-9)
        assert diag.iterations_used < 500

    def test_am_settles_on_largest_self_consistent_root(self, scalar_model) -> None:
        # nu^2 = r^2 + gamma^2 solves e^2 nu^2 = (p + nu^2)^2; from the prior residual the
        # loop descends onto the larger root
        nu_sq = (14.0 + np.sqrt(16.0 * 12.0)) / 2.0
        belief, diag = oikf_step(
            scalar_model, self.POSTERIOR, [4.0], OikfConfig(method="AM", **self.CONVERGED)
        )
        assert diag.gamma_sq_final[0] == pytest.approx(nu_sq - 1.0, rel=1e-9)
        assert belief.mean[0] == pytest.approx(4.0 / (1.0 + nu_sq), rel=1e-9)

    @pytest.mark.parametrize(("residual_sq", "flagged"), [(1.6, False), (3.0, True)])
    def test_em_flags_only_beyond_innovation_spread(
        self, scalar_model, residual_sq: float, flagged: bool
    ) -> None:
        y = [float(np.sqrt(residual_sq))]
        belief, diag = oikf_step(
            scalar_model, self.POSTERIOR, y, OikfConfig(method="EM", **self.CONVERGED)
        )
        assert bool(diag.outlier_detected[0]) is flagged
        assert diag.gamma_sq_final[0] == pytest.approx(max(residual_sq - 2.0, 0.0), abs=1e-9)
        if not flagged:
            kf_belief, _ = kf_step(scalar_model, self.POSTERIOR, y)
            assert_array_equal(belief.mean, kf_belief.mean)
            assert_array_equal(belief.cov, kf_belief.cov)

    @pytest.mark.parametrize("method", ["EM", "AM"])
    def test_extra_iteration_at_fixed_point_changes_nothing(
        self, wna, prior_belief, method: str
    ) -> None:
        y = [9.0, -30.0]
        settled, settled_diag = oikf_step(
            wna, prior_belief, y, OikfConfig(method=method, max_iters=400, conv_tol=0.0)
        )
        again, again_diag = oikf_step(
            wna, prior_belief, y, OikfConfig(method=method, max_iters=401, conv_tol=0.0)
        )
        assert_allclose(again_diag.gamma_sq_final, settled_diag.gamma_sq_final, rtol=1e-12)
        assert_allclose(again.mean, settled.mean, rtol=1e-12, atol=1e-14)
        assert_allclose(again.cov, settled.cov, rtol=1e-12, atol=1e-14)
