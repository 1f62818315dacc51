"""Exception types shared across the package."""


class PovbenchError(Exception):
    """Base class for all package errors."""


class SchemaError(PovbenchError):
    """A table or config does not have the declared columns/keys."""


class DataValidationError(PovbenchError):
    """A value violates a dataset invariant (bad income, bad range, ...)."""


class ParseError(PovbenchError):
    """A cell or config entry could not be parsed."""


class ConfigError(PovbenchError):
    """An experiment configuration is invalid."""


class PatternError(PovbenchError):
    """A missingness pattern cannot be applied (e.g. empty eligible set)."""


class AlignmentError(PovbenchError):
    """Two aligned vectors/containers have mismatched lengths."""


class SingularDesignError(PovbenchError):
    """The regression design matrix is rank deficient."""

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class DegenerateTargetError(PovbenchError):
    """A categorical target has a single class."""


class FitConvergenceWarning(UserWarning):
    """An iterative fit stopped at its iteration cap without converging."""
