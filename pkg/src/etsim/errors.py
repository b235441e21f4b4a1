"""Exception types shared across the package."""


class SimulationError(Exception):
    """Base class for all errors raised by this package."""


class GraphError(SimulationError, ValueError):
    """Invalid network description."""


class NonSymmetricError(GraphError):
    """Adjacency matrix is not square/symmetric."""


class SelfLoopError(GraphError):
    """Adjacency matrix has a nonzero diagonal entry."""


class EmptyNetworkError(GraphError):
    """Network with zero agents."""


class NumericalError(SimulationError, ArithmeticError):
    """An iterative numerical routine failed to converge."""


class CholeskyError(SimulationError, ValueError):
    """Noise covariance is not positive semidefinite within tolerance."""


class DomainError(SimulationError, ValueError):
    """Arguments outside the domain of an operation."""


class NonFiniteError(SimulationError, FloatingPointError):
    """An estimator update produced NaN/Inf (divergence or bad config)."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class NotHurwitzError(SimulationError, ValueError):
    """Drift matrix has an eigenvalue with nonnegative real part."""


class SingularSystemError(SimulationError, ValueError):
    """A dense linear solve degenerated."""


class MissingBaselineError(SimulationError, ValueError):
    """A metric needs a parallel baseline trajectory that was not recorded."""


class ConfigError(SimulationError, ValueError):
    """Invalid simulation configuration."""


class ParseError(ConfigError):
    """Configuration file could not be parsed."""


class DimensionMismatchError(ConfigError):
    """Configuration fields have mutually inconsistent dimensions."""
