class NumericalError(ArithmeticError):
    """A factorisation, lattice or solver step failed numerically."""


class ConfigError(ValueError):
    """An experiment or CLI configuration is invalid."""
