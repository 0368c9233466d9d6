"""Exception hierarchy shared by the library and the command line.

The CLI maps each family onto a distinct exit code, so every module raises
one of these instead of a bare ValueError/RuntimeError.
"""


class ReltvError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class InputError(ReltvError, ValueError):
    """Malformed or out-of-range user input."""

    exit_code = 2


class DomainError(ReltvError, ValueError):
    """A point outside the region where a formula is defined."""

    exit_code = 3


class ConvergenceError(ReltvError, RuntimeError):
    """An iterative method or quadrature did not reach its tolerance."""

    exit_code = 4

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate
