"""Tests for the exception hierarchy."""

from pathlib import Path

import pytest

from oikf.exceptions import (
    ConfigError,
    DatasetError,
    DatasetParseError,
    DimensionMismatchError,
    EmptyDatasetError,
    ExportError,
    FilterError,
    ModelValidationError,
    NegativeSecondMomentError,
    NonDiagonalRError,
    NonMonotonicTimeError,
    NonPsdCovarianceError,
    OutOfRangeError,
    SingularInnovationError,
)


class TestHierarchy:
    """Exceptions keep the builtin bases callers already catch."""

    @pytest.mark.parametrize(
        "exc_type",
        [DimensionMismatchError, NonDiagonalRError, NonPsdCovarianceError],
    )
    def test_model_errors(self, exc_type) -> None:
        exc = exc_type("bad", matrix="R")
        assert isinstance(exc, ModelValidationError)
        assert isinstance(exc, ValueError)
        assert exc.matrix == "R"

    @pytest.mark.parametrize("exc_type", [SingularInnovationError, NegativeSecondMomentError])
    def test_filter_errors(self, exc_type) -> None:
        exc = exc_type("bad", matrix="S", step=4)
        assert isinstance(exc, FilterError)
        assert isinstance(exc, ArithmeticError)
        assert not isinstance(exc, ValueError)
        assert (exc.matrix, exc.step) == ("S", 4)

    def test_filter_error_step_defaults_to_none(self) -> None:
        assert FilterError("bad", matrix="S").step is None

    @pytest.mark.parametrize(
        "exc_type", [DatasetParseError, NonMonotonicTimeError, EmptyDatasetError, OutOfRangeError]
    )
    def test_dataset_errors(self, exc_type) -> None:
        exc = exc_type("bad", path="data/gps.csv")
        assert isinstance(exc, DatasetError)
        assert isinstance(exc, ValueError)
        assert exc.path == Path("data/gps.csv")

    def test_dataset_error_without_path(self) -> None:
        assert DatasetError("bad").path is None

    def test_parse_error_context(self) -> None:
        exc = DatasetParseError("missing column", path="a.csv", row=0, column="east")
        assert (exc.row, exc.column) == (0, "east")
        assert str(exc) == "missing column"

    def test_config_and_export(self) -> None:
        assert issubclass(ConfigError, ValueError)
        assert issubclass(ExportError, OSError)
