"""Exception hierarchy; each error class carries the CLI exit status it maps to."""


class SecnError(Exception):
    """Base class for all toolkit errors."""

    exit_code: int = 1


class ConfigError(SecnError):
    """Invalid flags, config file values or paths."""

    exit_code = 1


class DataError(SecnError):
    """Unreadable or malformed input data."""

    exit_code = 2


class CriteoParseError(DataError):
    """A Criteo TSV line that cannot be parsed."""

    def __init__(self, line_number: int, reason: str):
        self.line_number = line_number
        self.reason = reason
        super().__init__(f"line {line_number}: {reason}")


class SchemaMismatchError(DataError):
    """Data and model disagree on the dataset schema."""


class CheckpointError(DataError):
    """Corrupt, truncated or incompatible checkpoint file."""


class NumericError(SecnError):
    """Numeric failure during training."""

    exit_code = 3


class NonFiniteGradientError(NumericError):
    def __init__(self, group: str):
        self.group = group
        super().__init__(f"non-finite gradient in parameter group '{group}'")


class TrainingDivergedError(NumericError):
    def __init__(self, epoch: int, batch: int):
        self.epoch = epoch
        self.batch = batch
        super().__init__(f"training diverged at epoch {epoch}, batch {batch}: loss is not finite")


class ShapeError(ValueError):
    """Operand shapes do not fit the requested operation."""
