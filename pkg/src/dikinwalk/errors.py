"""Exception hierarchy shared by every module."""


class DikinError(Exception):
    """Base class for all package errors."""


class InputError(DikinError, ValueError):
    """Malformed or inconsistent user input (bad shapes, bad config, bad file)."""


class InfeasiblePointError(DikinError, ValueError):
    """A barrier was evaluated at a point outside the open body."""


class StepTooLargeError(DikinError, ValueError):
    """A finite-difference probe left the interior."""


class UnboundedBodyError(DikinError):
    """A ray does not leave the body within the configured horizon."""


class NumericalError(DikinError, ArithmeticError):
    """A factorization failed or produced non-finite values."""

    def __init__(self, message, x=None):
        super().__init__(message)
        self.x = x
