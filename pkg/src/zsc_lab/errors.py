"""Exception hierarchy shared by every module and mapped to CLI exit codes."""


class ZscLabError(Exception):
    exit_code = 1


class ConfigError(ZscLabError, ValueError):
    """Invalid game, training, or experiment configuration."""

    exit_code = 2


class ContractError(ZscLabError):
    """An operation was called outside its precondition."""

    exit_code = 3


class NumericError(ZscLabError, ArithmeticError):
    """Non-finite value entered a computation that requires finite reals."""

    exit_code = 3


class DegenerateInputError(ZscLabError, ValueError):
    """Statistic undefined for the given input (e.g. zero variance)."""

    exit_code = 3


class StageMissingError(ZscLabError):
    """A report was requested for an experiment whose stages are incomplete."""

    exit_code = 3


class OutputError(ZscLabError, OSError):
    """A file could not be read or written; the message names the path."""

    exit_code = 4
