"""Exception hierarchy for cascadeflow.

Error kinds are distinct so callers (gateway, CLI) can map them to
degradation behavior and exit codes without string matching.
"""

from __future__ import annotations


class CascadeflowError(Exception):
    """Base class for all cascadeflow errors."""


class InvalidInputError(CascadeflowError, ValueError):
    """A value violates an operation's preconditions (NaN/Inf, empty, length mismatch)."""


class ConfigurationError(CascadeflowError, ValueError):
    """A policy or gateway configuration is not usable as given."""


class CalibrationError(CascadeflowError, ValueError):
    """A calibration operation cannot run on the given dataset (missing labels, empty set)."""


class DatasetError(CascadeflowError, ValueError):
    """A dataset file failed to parse or validate.

    ``line`` is the 1-based line number of the offending record when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class BackendError(CascadeflowError, RuntimeError):
    """Base class for model-backend failures."""


class UnknownIdError(BackendError, KeyError):
    """A replay backend was asked for an id its dataset does not contain."""

    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return self.args[0] if self.args else ""


class BackendTimeoutError(BackendError, TimeoutError):
    """A remote backend did not answer within its configured timeout."""


class MalformedResponseError(BackendError):
    """A remote backend answered with something that is not the wire schema."""


class PartialProgressError(BackendError):
    """A bulk backend operation aborted midway.

    ``completed`` counts the records fully processed (and, for writers,
    flushed) before the failure.
    """

    def __init__(self, message: str, completed: int, cause: Exception | None = None):
        self.completed = completed
        self.cause = cause
        super().__init__(f"{message} (completed {completed} records)")
