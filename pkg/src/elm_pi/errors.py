"""Exception hierarchy shared by all modules."""

import numpy as np


class ElmPiError(Exception):
    """Base class for all errors raised by the package."""


class ShapeError(ElmPiError, ValueError):
    """Array dimensions are incompatible."""


class DomainError(ElmPiError, ValueError):
    """A scalar argument lies outside its admissible range."""


class ConfigurationError(ElmPiError, ValueError):
    """Invalid model, generator or split configuration."""


class EmptyDataError(ElmPiError, ValueError):
    """No samples were supplied where at least one is needed."""


class InsufficientDataError(ElmPiError, ValueError):
    """Too few samples for the requested procedure."""


class SingularMatrixError(ElmPiError, np.linalg.LinAlgError):
    """Cholesky factorization failed.

    ``pivot`` is the zero-based index of the first non-positive pivot.
    """

    def __init__(self, pivot, message=None):
        self.pivot = pivot
        super().__init__(
            message or f"matrix is not positive definite (pivot index {pivot})"
        )


class ParseError(ElmPiError, ValueError):
    """Malformed input file; carries the offending row and column if known."""

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class SchemaError(ElmPiError, ValueError):
    """Input does not have the expected columns or dimensions."""


class ModelFileError(ElmPiError, ValueError):
    """A saved model could not be loaded; ``field`` names the culprit."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
