"""Typed exceptions for oikf.

Model, dataset and configuration errors subclass :class:`ValueError` so plain
``except ValueError`` handlers keep working; numerical faults raised from inside a filter step
subclass :class:`ArithmeticError`. Every exception carries the context that produced it (the
offending matrix, file, row, or time step) as attributes as well as in its message.

Example:
    >>> from oikf import LinearGaussianModel, validate_model
    >>> from oikf.exceptions import ModelValidationError
    >>> try:
    ...     validate_model(LinearGaussianModel(F=[[1.0]], H=[[1.0, 0.0]], Q=[[0.1]], R=[[1.0]]))
    ... except ModelValidationError as exc:
    ...     print(type(exc).__name__, exc.matrix)
    DimensionMismatchError H
"""

from __future__ import annotations

from pathlib import Path

__all__ = [
    "ModelValidationError",
    "DimensionMismatchError",
    "NonDiagonalRError",
    "NonPsdCovarianceError",
    "FilterError",
    "SingularInnovationError",
    "NegativeSecondMomentError",
    "DatasetError",
    "DatasetParseError",
    "NonMonotonicTimeError",
    "EmptyDatasetError",
    "OutOfRangeError",
    "ConfigError",
    "ExportError",
]


class ModelValidationError(ValueError):
    """A state-space model or belief violates one of its invariants.

    ``matrix`` names the offending matrix (``"F"``, ``"H"``, ``"Q"``, ``"R"``, ``"belief.cov"``
    ...), so callers can report which part of a configuration is wrong.
    """

    def __init__(self, message: str, *, matrix: str) -> None:
        super().__init__(message)
        self.matrix = matrix


class DimensionMismatchError(ModelValidationError):
    """Matrix or vector shapes are inconsistent with the model dimensions (m, n)."""


class NonDiagonalRError(ModelValidationError):
    """The observation-noise covariance R has a non-zero off-diagonal entry."""


class NonPsdCovarianceError(ModelValidationError):
    """A covariance is asymmetric, not positive semi-definite, or (for R) not strictly positive."""


class FilterError(ArithmeticError):
    """A filter step hit a numerical fault.

    ``matrix`` names the quantity that failed (e.g. ``"S"`` for the innovation covariance);
    ``step`` is the time index when the failure happened inside :func:`oikf.run_filter`, or
    ``None`` for a direct single-step call.
    """

    def __init__(self, message: str, *, matrix: str, step: int | None = None) -> None:
        super().__init__(message)
        self.matrix = matrix
        self.step = step


class SingularInnovationError(FilterError):
    """The innovation covariance S is not positive definite or exceeds the condition bound."""


class NegativeSecondMomentError(FilterError):
    """An EM residual second moment came out negative beyond round-off.

    This signals an implementation fault, not a property of the data: the second moment
    (y - Hx)^2 + (H Sigma H^T)_kk is a sum of non-negative terms.
    """


class DatasetError(ValueError):
    """A trajectory dataset could not be loaded. ``path`` is the source file, when known."""

    def __init__(self, message: str, *, path: str | Path | None = None) -> None:
        super().__init__(message)
        self.path = Path(path) if path is not None else None


class DatasetParseError(DatasetError):
    """A dataset file or one of its columns could not be parsed.

    ``row`` is the 1-based data row (0 for the header) and ``column`` the column name involved.
    """

    def __init__(
        self,
        message: str,
        *,
        path: str | Path | None = None,
        row: int | None = None,
        column: str | None = None,
    ) -> None:
        super().__init__(message, path=path)
        self.row = row
        self.column = column


class NonMonotonicTimeError(DatasetError):
    """Timestamps are not strictly increasing after malformed rows were dropped."""


class EmptyDatasetError(DatasetError):
    """No usable rows remain in a dataset."""


class OutOfRangeError(DatasetError):
    """An observation timestamp lies outside the ground-truth coverage (no extrapolation)."""


class ConfigError(ValueError):
    """A configuration file could not be decoded or contains non-finite values.

    Structural validation failures surface as the original :class:`pydantic.ValidationError`.
    """


class ExportError(OSError):
    """A report or trajectory file could not be written."""
