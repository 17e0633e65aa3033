"""Shared exception taxonomy.

InputError maps to CLI exit code 2, SolverError to exit code 1.
"""


class InputError(ValueError):
    """A precondition on user-supplied data is violated."""


class SolverError(RuntimeError):
    """An iterative solver failed to meet its contract."""


class ResonanceError(SolverError):
    """A linear solve hit (or nearly hit) an eigenvalue of the operator."""

    def __init__(self, message, nearest_eigenvalue=None):
        super().__init__(message)
        self.nearest_eigenvalue = nearest_eigenvalue
