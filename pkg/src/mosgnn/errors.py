"""Exception taxonomy shared across the package.

Grouping matters for the CLI, which maps usage problems, data/format
problems, and numeric failures onto distinct exit codes.
"""


class MosgnnError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(MosgnnError):
    """Operands have incompatible shapes."""


class ParameterError(MosgnnError):
    """An argument is outside its documented range (a usage error)."""


class DataError(MosgnnError):
    """Input content is invalid: non-finite values, bad labels, and so on."""


class FormatError(MosgnnError):
    """A binary or JSON file violates its format contract."""


class EvaluationError(MosgnnError):
    """A metric or loss was requested over an empty node selection."""


class NumericError(MosgnnError):
    """A computation produced non-finite values."""


class StateError(MosgnnError):
    """An operation was called out of order, e.g. backward before forward."""


class BatchError(MosgnnError):
    """A graph batch cannot be assembled from the given inputs."""


class GraphConstructionError(MosgnnError):
    """A graph cannot be built from the given node set."""


class ManifestError(MosgnnError):
    """An experiment manifest is malformed or self-contradictory."""


class CheckpointError(MosgnnError):
    """A checkpoint is unreadable or incompatible with the requested use."""
