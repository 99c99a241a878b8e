"""Exception types shared across the package."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class DeltaKernelNotPointwise(DomainError):
    """The delta kernel has no pointwise correlation value; use its closed forms."""


class QuadratureDidNotConverge(RuntimeError):
    """Adaptive quadrature hit the subdivision cap before reaching tolerance."""

    def __init__(self, message: str, error_estimate: float):
        super().__init__(f"{message} (worst error estimate {error_estimate:.3e})")
        self.error_estimate = error_estimate


class NotCompletelyPositive(ValueError):
    """Channel parameters describe a non-CP map (negative decay exponent)."""


class SingularState(ValueError):
    """QFI is undefined: |r| = 1 with a radial parameter derivative."""


class DegenerateDenominator(ArithmeticError):
    """A structurally positive denominator evaluated to zero."""


class ConfigError(ValueError):
    """Invalid run configuration (CLI flags or config file)."""


class NoDataError(ValueError):
    """Plot rendering was asked to run on an empty or missing dataset."""
