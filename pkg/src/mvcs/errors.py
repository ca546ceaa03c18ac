"""Exception types shared across the package."""


class MVCSError(Exception):
    """Base class for all package errors."""


class CapExceeded(MVCSError):
    """An enumeration would exceed its configured size cap."""


class BoundaryPoint(MVCSError):
    """A geometric routine received a point with some coordinate <= 0."""


class NotOnSimplex(MVCSError, ValueError):
    """A vector does not lie on the probability simplex."""


class SolverFailure(MVCSError):
    """A numerical solver did not converge within its budget."""


class EmptyVertexList(MVCSError, ValueError):
    """A maximisation over polyhedron vertices was given no vertices."""


class NoCandidates(MVCSError):
    """The orthogonality system produced no admissible solutions."""
