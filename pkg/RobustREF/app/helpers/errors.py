"""
This module defines the exception hierarchy shared by the services and the CLI.

Every error carries an exit code and a detail record shaped like the payloads the
command layer reports:

    {"status": False, "error": "<class name>", "message": "<text>"}

Validation errors (bad user input, bad parameters) map to exit code 2 and numerical
failures (a solver that cannot produce a trustworthy answer) map to exit code 1.

Classes:
    REFError: Base class for all errors raised by this package.
    ValidationFailure: Base class for input and parameter errors (exit code 2).
    NumericalFailure: Base class for solver failures (exit code 1).
"""

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 1


class REFError(Exception):
    """
    Base error with an exit code and a structured detail record.

    Attributes:
        exit_code (int): Process exit code the CLI uses for this error.
        message (str): Human readable description.
    """
    exit_code = EXIT_NUMERICAL

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message

    @property
    def detail(self) -> dict:
        """
        Structured description of the error.

        Returns:
            dict: status flag, error class name and message.
        """
        return {
            "status": False,
            "error": type(self).__name__,
            "message": self.message,
        }


class ValidationFailure(REFError):
    """Input or parameter outside the admissible range."""
    exit_code = EXIT_VALIDATION


class NumericalFailure(REFError):
    """A solver could not produce a result within its tolerances."""
    exit_code = EXIT_NUMERICAL


class RangeError(ValidationFailure):
    """A level parameter (alpha, tau) lies outside (0, 1)."""


class UnsupportedDegree(ValidationFailure):
    """No homogeneous score of the requested form exists for this degree."""


class BadConstant(ValidationFailure):
    """A score-family constant violates its sign requirement."""


class DomainError(ValidationFailure):
    """A prediction or observation lies outside the action domain."""


class BadEpsilon(ValidationFailure):
    """Negative or non-finite KL tolerance."""


class EmptyInput(ValidationFailure):
    """No observations were supplied."""


class LengthMismatch(ValidationFailure):
    """Paired inputs have different lengths."""


class ShapeMismatch(ValidationFailure):
    """A matrix argument has the wrong shape."""


class BadSpec(ValidationFailure):
    """A distribution, copula or layer specification is invalid."""


class BadSeedStream(ValidationFailure):
    """A seed cannot be turned into a random stream."""


class TooManyAtoms(ValidationFailure):
    """The brute-force oracle was given more atoms than it can handle."""


class GridTooCoarse(ValidationFailure):
    """The grid oracle was given too few grid points."""


class RankDeficient(ValidationFailure):
    """The regression design matrix does not have full column rank."""


class NonFinite(NumericalFailure):
    """Scores or tilted quantities overflowed to a non-finite value."""


class NoSignChange(NumericalFailure):
    """The outer derivative does not change sign inside the expanded bracket."""


class NonConvergence(NumericalFailure):
    """An iterative solver exhausted its iteration budget."""
