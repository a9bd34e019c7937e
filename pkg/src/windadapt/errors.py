"""Exception hierarchy shared across the package.

DataError subclasses map to CLI exit code 2, NumericalDivergence to 3.
"""


class WindAdaptError(Exception):
    """Base class for all package errors."""


class DataError(WindAdaptError):
    """Invalid input data or configuration (CLI exit code 2)."""


class MissingColumnError(DataError):
    pass


class MalformedTimestampError(DataError):
    pass


class OutOfRangeError(DataError):
    pass


class EmptyFileError(DataError):
    pass


class EmptyIntersectionError(DataError):
    pass


class DegenerateFeatureError(DataError):
    pass


class EmptySideError(DataError):
    """A chronological split left train or test empty."""


class ArchMismatchError(DataError):
    """Checkpoint architecture incompatible with the dataset."""


class ConfigError(DataError):
    pass


class CheckpointError(DataError):
    pass


class BadMagicError(CheckpointError):
    pass


class VersionMismatchError(CheckpointError):
    pass


class TruncatedError(CheckpointError):
    pass


class NumericalDivergence(WindAdaptError):
    """NaN or infinity appeared during a forward/backward pass (CLI exit code 3)."""
