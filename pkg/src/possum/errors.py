"""Exception types shared across the package."""


class DimensionMismatch(ValueError):
    """Operands live in polynomial rings with different variable counts."""


class DomainError(ValueError):
    """A point lies outside the requested domain beyond tolerance."""


class ConditioningFailure(ArithmeticError):
    """A moment-matrix Cholesky pivot fell below the safe threshold.

    Signals that the requested basis degree is too high for binary64.
    """


class LambdaTooSmall(ArithmeticError):
    """A low-order kernel eigenvalue dropped below 1/2.

    The inverse-operator analysis needs eigenvalues at least 1/2; raise the
    kernel half-degree r to recover.
    """


class SingularEigenvalue(ArithmeticError):
    """A kernel eigenvalue needed by the inverse operator is (near) zero."""


class CertificateInfeasible(RuntimeError):
    """The inverse-transformed polynomial is negative at a cubature node.

    Either epsilon is too small or the half-degree r is too small for the
    operator to be close enough to the identity.
    """
