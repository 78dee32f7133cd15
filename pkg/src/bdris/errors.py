"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operands have incompatible or non-square shapes."""


class ContractViolationError(ValueError):
    """An input does not satisfy a structural precondition
    (Hermitian / symmetric / skew-Hermitian / unit-modulus ...)."""


class NotPositiveDefiniteError(ValueError):
    """A matrix that must be positive definite is not."""


class NumericalConsistencyError(ArithmeticError):
    """A quantity that must be real (or otherwise consistent) carries a
    residue above tolerance, indicating corrupted inputs."""


class EstimationIllPosedError(ValueError):
    """The estimation problem is rank deficient and the requested
    quantity is undefined."""
