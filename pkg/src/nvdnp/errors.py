"""Exception hierarchy shared across the package.

The CLI maps :class:`InputError` subclasses to exit code 2 and
:class:`NumericalError` subclasses to exit code 3.
"""


class NvDnpError(Exception):
    """Base class for all package errors."""


class InputError(NvDnpError, ValueError):
    """Bad user input, configuration or file content."""


class NumericalError(NvDnpError, RuntimeError):
    """A numerical procedure failed on otherwise valid input."""


class DomainError(InputError):
    """Argument outside the domain of an operation."""


class ConfigError(InputError):
    pass


class InvalidTensorError(InputError):
    pass


class CapacityError(InputError):
    """More first-shell sites requested than exist."""


class PreconditionError(InputError):
    pass


class ResolutionError(InputError):
    """Frequency grid too coarse for the requested linewidth."""


class AmbiguousBranchError(NumericalError):
    """Eigenstates too strongly mixed to assign an m_s manifold."""

    def __init__(self, message, indices):
        super().__init__(message)
        self.indices = tuple(indices)


class FitError(NumericalError):
    """Non-convergence or a singular covariance in a least-squares fit."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class UnboundedEnhancementError(NumericalError):
    """Thermal amplitude interval includes zero, so the enhancement has no upper bound."""


class ParseError(InputError):
    def __init__(self, message, line, column):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column
        self.reason = message


class CompileError(InputError):
    def __init__(self, message, events=()):
        super().__init__(message)
        self.events = tuple(events)


class ZeroSignalWarning(UserWarning):
    """Acquisition without a preceding excitation pulse."""


class DegeneracyWarning(UserWarning):
    pass


class ResolutionWarning(UserWarning):
    pass
