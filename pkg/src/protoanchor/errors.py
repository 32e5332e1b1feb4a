"""Exception types raised across the package."""


class ProtoAnchorError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(ProtoAnchorError):
    """A file or value does not conform to the expected binary/JSONL layout."""


class ConsistencyError(ProtoAnchorError):
    """Two inputs that must agree (matrix vs. metadata, ids) do not."""


class DegenerateVectorError(ProtoAnchorError):
    """A vector that must have nonzero norm collapsed to (near) zero."""


class BoundsError(ProtoAnchorError):
    """An index or count parameter is outside its valid range."""


class ContractError(ProtoAnchorError):
    """A caller violated an API precondition (shape, dtype, emptiness)."""


class EmptyClassError(ProtoAnchorError):
    """A class has no member rows to aggregate."""


class UndefinedMetricError(ProtoAnchorError):
    """A metric is undefined for the given inputs (e.g. no positives)."""


class MissingEmbeddingError(ProtoAnchorError):
    """A rendered prompt has no embedding in the supplied lookup."""
