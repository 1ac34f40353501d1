"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class ConstructionError(ValueError):
    """A lattice layout cannot satisfy the requested edge terminations."""


class NumericalError(RuntimeError):
    """A numerical routine failed to converge or lost accuracy."""


class UndefinedCorrelationError(DomainError):
    """g2 requested for a record with zero singles."""


class FitError(RuntimeError):
    pass


class InversionError(RuntimeError):
    """Tomographic design matrix is rank deficient."""


class ConstrainedFitError(RuntimeError):
    """Trace-preservation penalty could not bring the defect below tolerance."""

    def __init__(self, message: str, residuals: dict | None = None):
        super().__init__(message)
        self.residuals = residuals or {}
