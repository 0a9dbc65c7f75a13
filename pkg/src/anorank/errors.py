"""Exception types shared across the package."""


class AnorankError(Exception):
    """Base class for all package errors."""


class ParseError(AnorankError):
    """Malformed input file (bad cell, bad label line)."""


class DimensionError(AnorankError):
    """Shape or length mismatch between operands."""


class LabelRangeError(AnorankError):
    """Label index outside the dataset's row range."""


class ConfigError(AnorankError):
    """Invalid configuration value or combination."""


class ContractError(AnorankError):
    """Operation called outside its preconditions."""


class TrainingError(AnorankError):
    """Training diverged (non-finite loss)."""
