"""Exception hierarchy shared by all boxtrack modules."""


class TrackingError(Exception):
    """Base class for every error raised by boxtrack."""


class NonPositiveSize(TrackingError):
    """A state vector decodes to a box with non-positive width or height."""


class InvalidDt(TrackingError):
    """The sampling period must be strictly positive and finite."""


class DimensionMismatch(TrackingError):
    """Operands have incompatible shapes."""


class SingularInnovation(TrackingError):
    """The innovation covariance is numerically singular."""


class OutOfOrderFrame(TrackingError):
    """Frames were fed to the tracker with a decreasing frame index."""


class ParseError(TrackingError):
    """A detection file row could not be parsed.

    Carries the 1-based line number and, when known, the 1-based field
    index of the offending value.
    """

    def __init__(self, message: str, line: int, column: int | None = None):
        loc = f"line {line}" if column is None else f"line {line}, field {column}"
        super().__init__(f"{message} ({loc})")
        self.line = line
        self.column = column


class EmptyInput(TrackingError):
    """The detection file exists but contains no data rows."""


class InsufficientSamples(TrackingError):
    """Sample covariance estimation needs at least two samples."""
