"""Exception types shared across the package."""


class JointScaleError(Exception):
    """Base class for all errors raised by this package."""


class InvalidInput(JointScaleError, ValueError):
    """Input violates a precondition (shape, finiteness, range)."""


class DegenerateInput(JointScaleError, ValueError):
    """Input is structurally valid but degenerate for the operation."""


class DegenerateWeights(JointScaleError, ValueError):
    """Weight matrix induces a disconnected graph; V has rank < n-1."""


class DisconnectedGraph(JointScaleError, RuntimeError):
    """Graph is disconnected where connectivity is required.

    Carries the number of connected components as ``n_components``.
    """

    def __init__(self, message: str, n_components: int):
        super().__init__(message)
        self.n_components = n_components


class NumericalFailure(JointScaleError, RuntimeError):
    """A numerical routine (SVD, log-domain scaling) failed to produce finite results."""
