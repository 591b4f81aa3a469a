"""Exception types raised by the solvers and harness."""


class UnderResolvedError(ValueError):
    """A domain component is too thin for the requested lattice."""


class MeshMismatchError(ValueError):
    """Two grid objects do not live on the same mesh or lattice."""


class FinitenessError(ValueError):
    """The shift reaches the principal eigenvalue.

    The generalized torsion problem, and hence Q(alpha, .), is finite only
    for alpha strictly below the principal eigenvalue.
    """


class ConvergenceError(RuntimeError):
    """An iterative method failed to reach its tolerance."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class BracketError(RuntimeError):
    """The radius solver could not bracket the target value."""
