"""Exception types shared across the package."""


class SymtestError(Exception):
    """Base class for all package-specific errors."""


class EigenFailure(SymtestError):
    """Jacobi sweep cap reached before the off-diagonal mass converged."""


class SingularCovariance(SymtestError):
    """Covariance (or another SPD input) has an eigenvalue at or below the floor."""


class InvalidDimension(SymtestError):
    """Dimension argument outside the supported range."""


class EmptyInput(SymtestError):
    """An operation received an empty sample or value pool."""


class InvalidSpec(SymtestError):
    """Malformed distribution/experiment specification."""


class DomainError(SymtestError):
    """Scalar argument outside the mathematical domain (e.g. p outside (0,1))."""


class DimensionError(SymtestError):
    """Sample dimension does not match the direction grid."""


class ExperimentFailure(SymtestError):
    """Too many Monte Carlo replicates failed; the experiment aborted."""
