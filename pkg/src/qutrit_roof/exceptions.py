"""Exception types raised by the package."""


class DomainError(ValueError):
    """A point lies outside the physical domain of the state family.

    Attributes
    ----------
    value : float or None
        The offending quantity (for instance the most negative eigenvalue).
    """

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class ConstraintError(ValueError):
    """Ansatz parameters violate their normalization constraints."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class EnvelopeError(RuntimeError):
    """The lower convex envelope cannot be built or queried."""


class SolverError(RuntimeError):
    """Raised for malformed SDP input (not for non-convergence)."""
