"""
Defines the exception hierarchy of the library.
Every exception knows the process exit code the command line maps it to.
"""

from src.constants import EXIT_INPUT_ERROR, EXIT_NUMERICAL_FAILURE


class TgpError(Exception):
    """
    Base class of all errors raised on purpose by the library.

    Attributes:
    exit_code -- the status the command line returns when this error escapes a command
    """

    exit_code: int = EXIT_NUMERICAL_FAILURE


class NumericalError(TgpError):
    exit_code = EXIT_NUMERICAL_FAILURE


class IllConditionedKernelError(NumericalError):
    """Raised when a gram matrix cannot be factorised even after jitter escalation."""


class DivergenceError(NumericalError):
    """Raised when training diverges or the sampler keeps producing non-finite energies."""


class InputError(TgpError, ValueError):
    exit_code = EXIT_INPUT_ERROR


class ContractViolationError(InputError):
    """Raised on shape, dimension or range violations of an operation's inputs."""


class SizeLimitError(InputError):
    pass


class KernelSignatureError(InputError):
    pass


class DataLoadError(InputError):
    """
    Raised when a dataset cannot be read.

    Keyword arguments:
    message -- the description of the problem
    path -- the file involved, if any
    line -- the 1-based line number of the offending record, if any
    """

    def __init__(self, message: str, path=None, line: int | None = None) -> None:
        location = ""
        if path is not None:
            location = f" ({path}" + (f", line {line}" if line is not None else "") + ")"
        super().__init__(message + location)
        self.path = path
        self.line: int | None = line


class ConfigError(InputError):
    pass


class EncoderMismatchError(InputError):
    pass
