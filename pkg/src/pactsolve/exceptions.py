"""Exception hierarchy shared by the solvers and the CLI."""


class PactSolveError(Exception):
    """Base class for all library errors."""


class ProblemValidationError(PactSolveError, ValueError):
    """Raised when a problem instance or one of its parts is malformed.

    ``field`` names the offending entry so the CLI can point at it.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class UnsupportedProblemError(PactSolveError):
    """The requested solver does not handle this utility pair."""


class InfeasibleProblemError(PactSolveError):
    """The participation constraint cannot be met inside the wage box."""


class BracketError(PactSolveError):
    """A monotone root could not be bracketed (non-binding diagnostic)."""


class ConvergenceError(PactSolveError):
    """Iteration cap reached; ``result`` holds the best iterate found."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class NoInteriorStatesError(PactSolveError):
    """Every wage sits on a bound, so the Borch ratio is undefined."""


class GridTooLargeError(PactSolveError):
    """Brute-force grid exceeds the enumeration budget."""
