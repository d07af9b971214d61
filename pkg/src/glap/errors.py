"""Exception types shared across the package.

Validation problems (bad shapes, malformed files, out-of-range flags) are
plain ``ValueError``; the classes below mark failures of the numerical
machinery itself, which the CLI reports with a distinct exit code.
"""


class NumericalError(RuntimeError):
    """A linear-algebra routine failed for numerical reasons."""


class SingularMatrixError(NumericalError):
    """A system matrix is singular and no ridge term was requested."""

    def __init__(self, message, rank=None, size=None):
        super().__init__(message)
        self.rank = rank
        self.size = size


class ConvergenceError(NumericalError):
    """An iterative solver hit its iteration budget before converging."""

    def __init__(self, message, kkt_violation=None):
        super().__init__(message)
        self.kkt_violation = kkt_violation
