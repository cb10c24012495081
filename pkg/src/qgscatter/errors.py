"""Exception types shared across the package.

Spectral evaluations refuse to produce garbage near genuine poles: they raise
instead.  Callers performing sweeps are expected to catch and resample.
"""


class QGScatterError(Exception):
    """Base class for all package errors."""


class GraphError(QGScatterError):
    """Invalid graph data or operation on a graph."""


class ContractLoopError(GraphError):
    """Attempt to contract a loop edge."""


class DisconnectedGraphError(GraphError):
    """Compact part of the graph is not connected."""


class NoLeadsError(GraphError):
    """Operation requires at least one lead but the graph has none."""


class ZeroEnergyError(QGScatterError):
    """Spectral point z = 0 requested (cot singular there)."""


class SpectralSingularityError(QGScatterError):
    """z at or near the Dirichlet spectrum of a compact edge."""

    def __init__(self, msg, z=None):
        super().__init__(msg)
        self.z = z


class SingularMatrixError(QGScatterError):
    """A required matrix inverse does not exist or is hopelessly conditioned."""


class SingularFactorError(SingularMatrixError):
    """The kappa-independent recovery factor is singular at this z (resample)."""


class SingularSystemError(QGScatterError):
    """Plane-wave matching system singular at this energy (resample)."""


class NonConvergenceError(QGScatterError):
    """Iterative procedure failed to stabilize."""


class InsufficientDataError(QGScatterError):
    """Dataset too small for the requested inversion."""
