"""Exception types shared across the package."""


class DimensionMismatchError(ValueError):
    """Operands live on incompatible spaces (matrix dims or lattice shapes)."""


class DefectiveMapError(RuntimeError):
    """A superoperator has (numerically) nontrivial Jordan blocks and cannot
    be diagonalized with a bi-orthogonal eigenbasis."""


class PreconditionFailedError(RuntimeError):
    """A propagation precondition (Kolmogorov/positivity) fails.

    Carries a ``witness`` describing the first violation.
    """

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class NonProbabilisticResultError(RuntimeError):
    """A propagated vector came out negative beyond tolerance."""


class NormalizationError(ValueError):
    """Coefficients violate a required normalization (e.g. generator rates
    must sum to zero)."""


class InvalidWeightsError(ValueError):
    """Mixture weights are not a probability distribution on the requested
    time window."""


class SingularEigenvalueError(RuntimeError):
    """A mixture eigenvalue function c_alpha(t) vanishes, so the local
    generator eigenvalue diverges there."""


class SingularResolventError(RuntimeError):
    """(s - L) is numerically singular at the requested s."""


class QuadratureNotConvergedError(RuntimeError):
    """Doubling the quadrature nodes still changes the result beyond
    tolerance."""


class DivergentTransformError(ValueError):
    """Laplace variable s does not dominate the signal's growth rate."""


class PoleEncounteredError(RuntimeError):
    """1 + f_hat(s) is within the pole floor; the kernel transform is
    undefined there."""


class OverflowInExponentialError(RuntimeError):
    """Matrix exponential overflowed (non-finite entries in the result)."""
