"""Exception types raised across the package."""


class AalfError(Exception):
    """Base class for all errors raised by :mod:`aalf`."""


# ingest
class MissingDataSection(AalfError, ValueError):
    pass


class MalformedRow(AalfError, ValueError):
    pass


class MissingValue(AalfError, ValueError):
    pass


class NonNumericValue(AalfError, ValueError):
    pass


class EmptyFile(AalfError, ValueError):
    pass


class TooShort(AalfError, ValueError):
    pass


class ZeroVariance(AalfError, ValueError):
    pass


class InsufficientHistory(AalfError, ValueError):
    pass


class UnknownFrequency(AalfError, ValueError):
    pass


# forecasters
class SingularSystem(AalfError, ArithmeticError):
    pass


class DimensionMismatch(AalfError, ValueError):
    pass


class DivergenceDetected(AalfError, ArithmeticError):
    pass


class AlignmentMismatch(AalfError, ValueError):
    pass


class UnknownSeries(AalfError, KeyError):
    pass


# oracle / metrics
class LengthMismatch(AalfError, ValueError):
    pass


class BOutOfRange(AalfError, ValueError):
    pass


class EmptySegment(AalfError, ValueError):
    pass


class Empty(AalfError, ValueError):
    pass


# features / selector
class MissingPredictions(AalfError, KeyError):
    pass


class EmptyData(AalfError, ValueError):
    pass


class SingleClass(AalfError, ValueError):
    pass


# stats
class DegenerateInput(AalfError, ValueError):
    pass


class AllZeroDifferences(AalfError, ValueError):
    pass


# pipeline
class StageMissing(AalfError, FileNotFoundError):
    """A pipeline stage was run before the stage it depends on."""
