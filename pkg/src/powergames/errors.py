"""Exception types shared across the package."""


class PowergamesError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(PowergamesError):
    """Invalid or malformed experiment configuration."""


class BudgetError(PowergamesError):
    """A requested computation exceeds the configured memory budget."""


class SolverStallError(PowergamesError):
    """The LP solver hit its iteration cap without certifying a verdict."""
