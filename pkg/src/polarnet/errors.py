"""Exception types shared across the package."""
from __future__ import annotations


class PolarnetError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(PolarnetError):
    """Input data or configuration violates a documented precondition."""


class ParseError(ValidationError):
    """A file could not be parsed; carries path and line context."""

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}: " if line is None else f"{path}:{line}: "
        super().__init__(where + message)


class UndefinedMetricError(PolarnetError):
    """The requested metric has no defined value on this input."""


class InternalConsistencyError(PolarnetError):
    """A computed quantity violates an invariant the implementation guarantees."""
