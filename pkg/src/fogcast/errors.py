"""Exception hierarchy shared across the package.

Three branches map onto the CLI exit codes: ConfigError -> 2,
DataError -> 3, InternalError -> 4.
"""

from dataclasses import dataclass


class FogcastError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(FogcastError):
    """Invalid configuration supplied by the caller."""


class InvalidHyperparams(ConfigError):
    pass


class InvalidSpec(ConfigError):
    """Synthetic-site specification violates its constraints."""


class OverlappingRanges(ConfigError):
    """Train and test date ranges intersect."""


class DataError(FogcastError):
    """Problem with the data supplied to an operation."""


class MalformedReport(DataError):
    """Raw report lacks a station or timestamp group."""


class MissingColumn(DataError):
    pass


class NonMonotonicTime(DataError):
    """Timestamps within a file are not strictly increasing."""


class EmptyGrid(DataError):
    pass


class NoOverlap(DataError):
    """Observation and reanalysis time ranges are disjoint."""


class SeriesTooShort(DataError):
    pass


class EmptyDataset(DataError):
    pass


class EmptyTraining(DataError):
    pass


class SchemaMismatch(DataError):
    pass


class DegenerateLabels(DataError):
    """Labels do not contain both classes."""


class SingleClass(DataError):
    pass


class NoPositives(DataError):
    pass


class UnachievableRecall(DataError):
    """No threshold reaches the requested recall."""


class OutOfRangeDay(DataError):
    """day_of_year outside 1..366."""


class OutOfRangeLatitude(DataError):
    """Latitude outside [-90, 90]."""


class CorruptModelFile(DataError):
    pass


class VersionMismatch(DataError):
    pass


class TooManyFeatures(DataError):
    """Subset enumeration infeasible for this tree."""


class InternalError(FogcastError):
    """An internal invariant was violated; indicates a bug, not bad input."""


class ZeroCoverNode(InternalError):
    """A tree node carries non-positive cover; attribution is undefined."""


@dataclass(frozen=True)
class RowError:
    """A rejected input row, collected instead of raised."""

    index: int
    reason: str
