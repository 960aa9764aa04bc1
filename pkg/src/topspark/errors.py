"""Exception types raised across the package."""


class TopsparkError(Exception):
    """Base class for all errors raised by this package."""


class ContractViolation(TopsparkError, ValueError):
    """An argument or state broke a documented precondition."""


class ConfigError(TopsparkError, ValueError):
    """Invalid configuration value or unknown configuration key."""


class DatasetError(TopsparkError):
    """Base class for dataset ingestion failures."""


class FormatError(DatasetError):
    """Unexpected magic number or malformed header."""


class TruncatedError(DatasetError):
    """File ended before the declared payload was read."""


class ConsistencyError(DatasetError):
    """Image and label files disagree (e.g. item counts)."""


class CheckpointError(TopsparkError):
    """Checkpoint container is unreadable or inconsistent."""
