"""Exception types shared across the package."""


class PPPLabError(Exception):
    """Base class for package errors."""


class DomainError(PPPLabError, ValueError):
    """An argument lies outside the domain of the operation."""


class GridError(PPPLabError, ValueError):
    """A value is not on the δ-grid of a random-walk model."""


class UndefinedDensityError(PPPLabError, ValueError):
    """The density vanishes (or does not exist) where it is needed."""


class PrecisionError(PPPLabError, ValueError):
    """Too few samples for a statistically meaningful check."""


class NotClosedFormError(PPPLabError, NotImplementedError):
    """No closed-form expression for this scheme/profile/model; simulate instead."""


class UnsupportedError(PPPLabError, ValueError):
    """The combination of arguments is outside what the operation supports."""


class ConfigError(PPPLabError, ValueError):
    """Invalid experiment configuration."""
