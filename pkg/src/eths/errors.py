"""Exception hierarchy shared across the package.

Each class maps to a distinct CLI exit code (see cli.py).
"""


class EthsError(Exception):
    """Base class for all package errors."""


class ValidationError(EthsError):
    """A parameter, scenario field or argument violates its contract."""


class BoundViolationError(EthsError):
    """A state left its admissible range (e.g. SOC outside the DoD band)."""

    def __init__(self, message: str, tick: int | None = None):
        if tick is not None:
            message = f"tick {tick}: {message}"
        super().__init__(message)
        self.tick = tick


class InfeasibleError(EthsError):
    """A scheduling problem has no feasible point; carries the violated bound."""


class SolverTimeoutError(EthsError):
    """Budget exhausted before a feasible schedule was found."""


class UsageError(EthsError):
    """An operation was called with inconsistent arguments (e.g. window mismatch)."""
