"""Exception hierarchy for ftlearn."""


class FTLearnError(Exception):
    """Base class for all ftlearn errors."""


class DataError(FTLearnError):
    """Bad or unusable input data."""


class SchemaError(DataError):
    """Schema config or CSV header problems."""


class DegenerateDataError(DataError):
    """A column carries no usable signal (single class, constant sensor, ...)."""


class ConfigError(FTLearnError):
    """Invalid learner or generator configuration."""


class TreeValidationError(FTLearnError):
    """A fault tree violates a structural invariant."""


class TreeParseError(FTLearnError):
    """A serialized fault tree could not be parsed."""


class NoStructureError(FTLearnError):
    """No gate is significant enough to build a tree for the failure."""
