"""Exception types shared across the package."""


class StructuralError(ValueError):
    """An operator or state violates a structural invariant.

    Raised when construction-time checks fail: hermiticity, unitarity,
    idempotency, unit trace, positive semidefiniteness, or a computed
    quantity that should be real carries a non-negligible imaginary part.
    """


class DimensionMismatchError(ValueError):
    """Operands live on Hilbert spaces of different dimension."""


class ZeroProbabilityBranchError(RuntimeError):
    """A conditioning event has numerically zero probability.

    Conditioning on such an outcome would divide by (near) zero; callers
    either treat the branch as extinct or surface the error.
    """
