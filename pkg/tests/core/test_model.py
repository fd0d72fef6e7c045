"""Tests for the state-space model, beliefs and their validation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_array_equal
from pydantic import ValidationError

from oikf.core.model import (
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
from oikf.exceptions import (
    DimensionMismatchError,
    ModelValidationError,
    NonDiagonalRError,
    NonPsdCovarianceError,
)


def _model(**overrides) -> LinearGaussianModel:
    matrices = {
        "F": [[1.0, 1.0], [0.0, 1.0]],
        "H": np.eye(2),
        "Q": [[1 / 3, 1 / 2], [1 / 2, 1.0]],
        "R": np.diag([1.0, 4.0]),
    }
    matrices.update(overrides)
    return LinearGaussianModel(**matrices)


class TestAsReadonly:
    """Tests for array coercion."""

    def test_scalar_promoted_to_matrix(self) -> None:
        arr = as_readonly(2.5, ndim=2)
        assert arr.shape == (1, 1)
        assert arr.dtype == np.float64

    def test_single_element_vector_promoted_to_matrix(self) -> None:
        assert as_readonly([3.0], ndim=2).shape == (1, 1)

    def test_result_is_readonly_copy(self) -> None:
        source = np.array([1.0, 2.0])
        arr = as_readonly(source, ndim=1)
        source[0] = 99.0
        assert arr[0] == 1.0
        with pytest.raises(ValueError):
            arr[0] = 5.0

    def test_wrong_rank_rejected(self) -> None:
        with pytest.raises(ValueError, match="2-D"):
            as_readonly([1.0, 2.0], ndim=2)


class TestSymmetryAndPsd:
    """Tests for symmetrize, is_symmetric and is_psd."""

    def test_symmetrize(self) -> None:
        assert_array_equal(symmetrize(np.array([[1.0, 2.0], [0.0, 1.0]])), [[1, 1], [1, 1]])

    def test_zero_matrix_is_symmetric_and_psd(self) -> None:
        zero = np.zeros((2, 2))
        assert is_symmetric(zero)
        assert is_psd(zero)

    def test_asymmetric_detected(self) -> None:
        assert not is_symmetric(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_negative_eigenvalue_detected(self) -> None:
        assert not is_psd(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_roundoff_negative_eigenvalue_tolerated(self) -> None:
        cov = np.array([[1.0, 1.0], [1.0, 1.0]]) - 1e-14 * np.eye(2)
        assert is_psd(cov)

    def test_non_finite_is_not_psd(self) -> None:
        assert not is_psd(np.array([[np.nan, 0.0], [0.0, 1.0]]))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=4, max_size=4))
    def test_gram_matrices_are_psd(self, values: list[float]) -> None:
        A = np.array(values).reshape(2, 2)
        assert is_psd(A @ A.T)
        assert is_symmetric(A @ A.T)


class TestLinearGaussianModel:
    """Tests for the model type."""

    def test_dimensions(self) -> None:
        model = _model(H=[[1.0, 0.0]], R=[[1.0]])
        assert (model.m, model.n) == (2, 1)
        assert_array_equal(model.r_sq, [1.0])

    def test_scalar_model(self, scalar_model) -> None:
        assert (scalar_model.m, scalar_model.n) == (1, 1)

    def test_frozen(self) -> None:
        model = _model()
        with pytest.raises(ValidationError):
            model.F = np.eye(2)

    def test_with_noise_scales_q_and_replaces_r(self) -> None:
        model = validate_model(_model())
        noisy = model.with_noise(q_scale=10.0, r_sq=9.0)
        assert_array_equal(noisy.Q, 10.0 * model.Q)
        assert_array_equal(noisy.R, 9.0 * np.eye(2))
        assert_array_equal(model.R, np.diag([1.0, 4.0]))

    def test_with_noise_per_dimension(self) -> None:
        noisy = validate_model(_model()).with_noise(r_sq=np.array([2.0, 3.0]))
        assert_array_equal(noisy.r_sq, [2.0, 3.0])

    def test_with_noise_revalidates(self) -> None:
        with pytest.raises(NonPsdCovarianceError):
            validate_model(_model()).with_noise(r_sq=0.0)


class TestValidateModel:
    """Tests for validate_model."""

    def test_valid_model_returned_unchanged(self) -> None:
        model = _model()
        assert validate_model(model) is model
        assert validate_model(validate_model(model)) is model

    def test_non_square_f(self) -> None:
        with pytest.raises(DimensionMismatchError) as info:
            validate_model(_model(F=np.ones((2, 3))))
        assert info.value.matrix == "F"

    @pytest.mark.parametrize(
        ("name", "value"),
        [
            ("H", np.eye(3)),
            ("Q", np.eye(3)),
            ("R", np.eye(1)),
        ],
    )
    def test_shape_mismatch_names_matrix(self, name: str, value: np.ndarray) -> None:
        with pytest.raises(DimensionMismatchError) as info:
            validate_model(_model(**{name: value}))
        assert info.value.matrix == name

    def test_non_diagonal_r(self) -> None:
        with pytest.raises(NonDiagonalRError):
            validate_model(_model(R=[[1.0, 0.1], [0.1, 1.0]]))

    def test_non_positive_r(self) -> None:
        with pytest.raises(NonPsdCovarianceError) as info:
            validate_model(_model(R=np.diag([1.0, 0.0])))
        assert info.value.matrix == "R"

    def test_asymmetric_q(self) -> None:
        with pytest.raises(NonPsdCovarianceError, match="symmetric"):
            validate_model(_model(Q=[[1.0, 0.5], [0.0, 1.0]]))

    def test_indefinite_q(self) -> None:
        with pytest.raises(NonPsdCovarianceError, match="semi-definite"):
            validate_model(_model(Q=[[1.0, 2.0], [2.0, 1.0]]))

    def test_zero_q_allowed(self) -> None:
        validate_model(_model(Q=np.zeros((2, 2))))

    def test_non_finite(self) -> None:
        with pytest.raises(ModelValidationError) as info:
            validate_model(_model(F=[[1.0, np.inf], [0.0, 1.0]]))
        assert info.value.matrix == "F"

    def test_errors_are_value_errors(self) -> None:
        with pytest.raises(ValueError):
            validate_model(_model(R=np.diag([1.0, -1.0])))


class TestGaussianBelief:
    """Tests for beliefs and check_belief."""

    def test_valid_belief(self, prior_belief) -> None:
        assert prior_belief.mean.shape == (2,)
        assert not prior_belief.cov.flags.writeable

    def test_shape_mismatch_rejected(self) -> None:
        with pytest.raises(ValidationError):
            GaussianBelief(mean=[0.0, 0.0], cov=np.eye(3))

    def test_non_psd_rejected(self) -> None:
        with pytest.raises(ValidationError):
            GaussianBelief(mean=[0.0, 0.0], cov=[[1.0, 2.0], [2.0, 1.0]])

    def test_unchecked_freezes_arrays(self) -> None:
        belief = GaussianBelief.unchecked(np.zeros(2), np.eye(2))
        assert not belief.mean.flags.writeable
        assert not belief.cov.flags.writeable

    def test_check_belief_dimension(self, prior_belief, error_log) -> None:
        assert check_belief(prior_belief, 2) is prior_belief
        with pytest.raises(DimensionMismatchError) as info:
            check_belief(prior_belief, 3, name="initial")
        assert info.value.matrix == "initial.mean"
        assert error_log == ["initial.mean has shape (2,), expected (3,)"]

    def test_check_belief_catches_unchecked_non_psd(self) -> None:
        bad = GaussianBelief.unchecked(np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]]))
        with pytest.raises(NonPsdCovarianceError):
            check_belief(bad, 2)

    def test_observation_prediction_coerces(self) -> None:
        pred = ObservationPrediction(mean=1.0, cov=2.0)
        assert pred.mean.shape == (1,)
        assert pred.cov.shape == (1, 1)
