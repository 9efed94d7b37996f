"""Exception hierarchy shared by every layer.

Library code raises these; only the command-line entry point maps them
to process exit codes.
"""


class RnntMwerError(Exception):
    """Base class for toolkit errors."""

    exit_code = 2


class InvalidArgumentError(RnntMwerError, ValueError):
    """A caller-supplied parameter is out of range."""

    exit_code = 1


class InvalidInputError(RnntMwerError, ValueError):
    """Input data violates a documented precondition."""

    exit_code = 2


class SizeLimitError(InvalidArgumentError):
    """An enumeration would exceed its hard cap."""


class ConfigError(RnntMwerError):
    """Settings failed validation. Message lists the offending field paths."""

    exit_code = 1


class DataError(RnntMwerError):
    """A data file is corrupt or inconsistent with its companions."""

    exit_code = 2


class CheckpointError(DataError):
    """A checkpoint could not be parsed or does not match the configured dims."""


class NumericError(RnntMwerError, ArithmeticError):
    """A numeric invariant was violated."""

    exit_code = 3


class NonFiniteLossError(NumericError):
    """Loss evaluated to inf or NaN."""

    def __init__(self, message: str, utterance_id: str | None = None):
        if utterance_id is not None:
            message = f"{message} (utterance {utterance_id})"
        super().__init__(message)
        self.utterance_id = utterance_id


class EmptyResultError(NumericError):
    """Beam search pruned every path to -inf."""
