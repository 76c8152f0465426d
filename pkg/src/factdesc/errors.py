"""Exception types shared across the package.

The CLI maps these onto exit codes: data problems exit 2, numeric
failures exit 3, everything argparse rejects exits 1.
"""


class DataError(Exception):
    """Input data violates the expected format or contract."""


class ParseError(DataError):
    """A dataset line could not be parsed."""

    def __init__(self, path, line_no, reason):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = path
        self.line_no = line_no


class CheckpointError(DataError):
    """A checkpoint file is corrupt or inconsistent."""


class ConfigError(ValueError):
    """A configuration value is out of range or unknown."""


class ShapeError(ValueError):
    """Tensor shapes do not satisfy an operation's contract."""


class InvalidMaskError(ValueError):
    """A mask leaves no selectable entries."""


class EmptyFactError(ValueError):
    """The copy head was pointed at a fact with no factual words."""


class NumericError(RuntimeError):
    """A numeric computation left the finite range."""


class TrainingDivergenceError(NumericError):
    """Training produced a non-finite gradient or loss."""
