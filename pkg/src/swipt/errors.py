"""Exception types raised by the library."""


class SwiptError(Exception):
    """Base class for all library errors."""


class ConfigError(SwiptError, ValueError):
    """Invalid scenario or run configuration."""


class DegenerateNoise(SwiptError, ValueError):
    """A bound was requested in a noise regime where it is undefined."""


class QuadratureFailure(SwiptError, ArithmeticError):
    """Adaptive integration did not reach the requested tolerance."""


class InfeasibleGeometry(SwiptError, ValueError):
    """A constellation cannot be built for the requested power budget."""


class SingularCovariance(SwiptError, ArithmeticError):
    """A noise covariance is not positive definite."""
