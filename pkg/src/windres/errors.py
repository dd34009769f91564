"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class WindResError(Exception):
    """Base class for all library errors."""


class ValidationError(WindResError, ValueError):
    """Input data or parameters violate a documented precondition."""


class NonFinite(ValidationError):
    def __init__(self, index: int):
        super().__init__(f"non-finite wind speed at index {index}")
        self.index = index


class NegativeSpeed(ValidationError):
    def __init__(self, index: int):
        super().__init__(f"negative wind speed at index {index}")
        self.index = index


class EmptySeries(ValidationError):
    def __init__(self, message: str = "series is empty"):
        super().__init__(message)


class EmptyGrid(ValidationError):
    def __init__(self, message: str = "evaluation grid is empty"):
        super().__init__(message)


class TooFewSamples(ValidationError):
    def __init__(self, n: int, required: int):
        super().__init__(f"need at least {required} samples, got {n}")
        self.n = n
        self.required = required


class ZeroVariance(ValidationError):
    def __init__(self, message: str = "sample has zero variance"):
        super().__init__(message)


class InvalidParams(ValidationError):
    pass


class SampleOutsideSupport(ValidationError):
    pass


class NotWeibullLike(ValidationError):
    pass


class NonConvergence(WindResError):
    pass


class BlockLongerThanSeries(ValidationError):
    def __init__(self, t: int, length: int):
        super().__init__(f"block length t={t} exceeds series length {length}")
        self.t = t
        self.length = length


class ZeroReferenceEnergy(ValidationError):
    def __init__(self, message: str = "reference series generates zero energy"):
        super().__init__(message)


# ingest

class IngestIOError(WindResError, OSError):
    pass


class ParseError(ValidationError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class NonMonotonicTimestamp(ParseError):
    def __init__(self, line: int):
        super().__init__(line, "timestamp is not strictly increasing")


class NoCompleteDays(ValidationError):
    def __init__(self, message: str = "no complete days in input"):
        super().__init__(message)


class PowerCurveError(ValidationError):
    """Raised for malformed power curves; ``problems`` lists every violation found."""

    def __init__(self, message: str, problems: list[str] | None = None):
        super().__init__(message)
        self.problems = problems or [message]


class NonMonotonicSpeeds(PowerCurveError):
    pass


class NegativePower(PowerCurveError):
    pass


class FewerThanTwoPoints(PowerCurveError):
    pass
