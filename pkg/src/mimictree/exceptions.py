"""Exception hierarchy shared by every module in the package."""


class MimicTreeError(Exception):
    """Base class for all errors raised by mimictree."""


class ConfigError(MimicTreeError, ValueError):
    """Invalid configuration or argument value."""


class SchemaError(MimicTreeError, ValueError):
    """Input file or dataset does not match the declared schema."""


class DataError(MimicTreeError, ValueError):
    """Malformed data values (NaN, unparseable cells, ordering violations)."""

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class LevelError(DataError):
    """A categorical cell holds a level that was not declared."""


class OracleError(MimicTreeError, RuntimeError):
    """The teacher violated the labelling protocol."""

    def __init__(self, message, row=None):
        if row is not None:
            message = f"{message} (at row {row})"
        super().__init__(message)
        self.row = row


class AugmentationError(MimicTreeError, ValueError):
    """Action replacement could not be performed."""
