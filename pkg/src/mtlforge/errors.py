"""Exception hierarchy shared by every stage of the pipeline.

The CLI maps ``ContractError`` (and subclasses) to exit code 1; ``OSError``
from file access maps to exit code 2.
"""


class ContractError(ValueError):
    """A caller violated a documented precondition."""


class ShapeError(ContractError):
    """Tensor dimensions are incompatible."""


class NumericError(ContractError, FloatingPointError):
    """NaN or otherwise unusable floating-point values."""


class SchemaError(ContractError):
    """A data file does not carry the columns or fields it must."""


class CompilationError(ContractError):
    """Compiling a task produced nothing usable."""


class StratificationError(ContractError):
    """A class is too small to be split with stratification."""


class CheckpointError(ContractError):
    """A checkpoint archive is corrupt, truncated or incompatible."""


class ConfigError(ContractError):
    """Invalid training or experiment configuration."""
