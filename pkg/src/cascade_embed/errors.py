"""Exception hierarchy shared by every stage of the pipeline."""


class CascadeEmbedError(Exception):
    """Base class for all package errors."""


class ConfigError(CascadeEmbedError, ValueError):
    """A configuration value is missing, unknown, or out of range."""


class InputError(CascadeEmbedError, ValueError):
    """An operation received data it cannot work with."""


class NumericError(CascadeEmbedError, ArithmeticError):
    """A non-finite value was passed to or produced by a numeric routine."""


class TrainingError(CascadeEmbedError, RuntimeError):
    """Training diverged or could not proceed."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration


class TransportError(CascadeEmbedError, RuntimeError):
    """A parameter message was lost or a receive timed out."""


class DataFormatError(CascadeEmbedError, ValueError):
    """A serialized file could not be parsed."""

    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}:"
            if line is not None:
                where += f"{line}:"
            where += " "
        super().__init__(where + message)
        self.path = path
        self.line = line
