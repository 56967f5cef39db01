"""Exception types shared across the toolkit.

``ValidationError`` covers bad inputs (CLI exit code 2), ``SolverError``
covers numerical failures such as non-convergence or a missing bracket
(CLI exit code 3).
"""


class VocabToolkitError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(VocabToolkitError, ValueError):
    """Invalid input data or arguments."""


class OutOfRangeError(ValidationError):
    """A lookup argument falls outside the covered domain."""


class UnderdeterminedError(ValidationError):
    """Not enough distinct data to fit the requested model."""


class SolverError(VocabToolkitError, RuntimeError):
    """A numerical solver failed (no bracket, no convergence, ...)."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial
