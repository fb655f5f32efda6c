"""Exception hierarchy shared by every curekit module.

Each exception class carries the process exit code the CLI maps it to, so the
command-line layer never has to know which module raised.
"""

from typing import Optional


class CureKitError(Exception):
    """Base class for all curekit failures."""

    exit_code = 1

    def __init__(self, message: str, operation: Optional[str] = None):
        self.message = message
        self.operation = operation
        if operation:
            super().__init__(f"{message} (operation: {operation})")
        else:
            super().__init__(message)


class UsageError(CureKitError):
    """Raised for invalid arguments or configuration."""

    exit_code = 1


class DataError(CureKitError):
    """Raised when the input data cannot be used."""

    exit_code = 2


class ParseError(DataError):
    """Raised when a CSV row cannot be parsed."""

    def __init__(self, message: str, row: Optional[int] = None, operation: str = "ingest_csv"):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message, operation)


class MissingColumn(DataError):
    pass


class EmptyAfterFiltering(DataError):
    pass


class InvalidSample(DataError):
    pass


class TooManyLevels(DataError):
    pass


class NumericalError(CureKitError):
    """Raised when an estimator is undefined for the given data."""

    exit_code = 3


class AllWeightsZero(NumericalError):
    """No covariate value lies within one bandwidth of the evaluation point."""

    def __init__(self, x0: float, h: float, operation: Optional[str] = "nw_weights"):
        self.x0 = x0
        self.h = h
        super().__init__(f"all kernel weights are zero at x0={x0!r} with h={h!r}", operation)


class DegenerateSample(NumericalError):
    pass


class DegenerateCovariate(NumericalError):
    pass


class NoUncensored(NumericalError):
    pass


class CureFractionOne(NumericalError):
    """The estimated uncure probability is zero, so the latency is undefined."""

    def __init__(self, x0: float, operation: Optional[str] = "latency"):
        self.x0 = x0
        super().__init__(f"estimated cure probability is 1 at x0={x0!r}; latency undefined", operation)


class GbarZero(NumericalError):
    pass


class InsufficientResamples(NumericalError):
    pass
