"""Exception hierarchy shared across the solver stack.

Each class maps to one CLI exit code, so keep the taxonomy flat.
"""


class AromlError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class InputError(AromlError):
    """Malformed user input: dimension mismatch, bad config, missing file."""

    exit_code = 2


class ModelInfeasibleError(AromlError):
    """The optimization model itself admits no feasible solution."""

    exit_code = 3


class ResourceBudgetError(AromlError):
    """An iteration/node budget was exhausted; carries the best incumbent."""

    exit_code = 4

    def __init__(self, message, incumbent=None):
        super().__init__(message)
        self.incumbent = incumbent


class SolverStallError(AromlError):
    """The LP solver hit its pivot cap without converging (numerical stall)."""

    exit_code = 4


class ConsistencyError(AromlError):
    """An internal invariant was violated (e.g. a broken cached reference)."""

    exit_code = 5


class StateError(AromlError):
    """An operation was called on an object in the wrong state."""

    exit_code = 5
