"""Exception hierarchy.

Three fatal families map onto the CLI exit codes: ConfigError -> 1,
ProviderError -> 2, DataError -> 3. Loaders additionally *count* recoverable
per-record problems instead of raising (see corpus.LoadReport).
"""


class SimpmineError(Exception):
    """Base class for all package errors."""


class ConfigError(SimpmineError):
    """Bad or missing configuration (paths, flags, parameter ranges)."""


class ProviderError(SimpmineError):
    """Embedding-provider failure."""


class ProviderUnavailable(ProviderError):
    """Provider unreachable or persistently failing after retries."""


class ProviderMiss(ProviderError):
    """Precomputed provider has no vector for a requested text."""


class DimensionMismatch(ProviderError):
    """Vectors of inconsistent dimensionality."""


class DataError(SimpmineError):
    """Malformed or unusable input data."""


class LineCountMismatch(DataError):
    """Parallel corpus sides have different line counts."""


class EmptyCorpus(DataError):
    """A corpus required to be non-empty had no usable records."""


class NoReferences(DataError):
    """SARI requested with an empty reference list."""


class MissingReference(DataError):
    """External reference file has no entry for a pair."""


class DegenerateAttribute(DataError):
    """Reference corpus has zero variance on an attribute."""

    def __init__(self, attribute, message=None):
        self.attribute = attribute
        super().__init__(message or f"attribute {attribute!r} has zero variance "
                                    "in the reference corpus")


class NonPositiveSigma(DataError):
    """Scoring requested with sigma <= 0."""


class AlignmentSkipped(SimpmineError):
    """One summary sentence could not be aligned (provider failure); the
    document continues."""
