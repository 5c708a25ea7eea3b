"""Exception types shared across the package."""


class CapgateError(Exception):
    """Base class for all errors raised by this package."""


class InsufficientData(CapgateError):
    """Too few observations for the requested computation."""


class DegenerateSample(CapgateError):
    """Zero-dispersion sample: capability is undefined at sd == 0."""


class DomainError(CapgateError):
    """Argument outside the mathematical domain of the operation."""


class CalibrationFailure(CapgateError):
    """A calibration target could not be met."""


class ParseError(CapgateError):
    """Malformed input record."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConsistencyError(CapgateError):
    """Input records contradict each other or violate an invariant."""
