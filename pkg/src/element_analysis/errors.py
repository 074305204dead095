"""Exception types raised by the analysis."""


class ConfigurationError(ValueError):
    """Inconsistent or invalid analysis parameters."""


class NumericalError(ArithmeticError):
    """A matrix or integral that should be well-behaved is not."""


class MonteCarloFloorError(ValueError):
    """Requested false-detection rate is below what the simulation resolves."""
