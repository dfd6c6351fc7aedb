"""Exception types shared across the package."""


class HyperworldsError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(HyperworldsError):
    """A configuration value, preset, or parameter is invalid."""


class UsageError(HyperworldsError):
    """API misuse: mismatched spaces, unnormalized states, and the like."""


class NumericalError(HyperworldsError):
    """A numerical routine failed or left its tolerance."""


class DomainError(HyperworldsError):
    """Argument lies outside the mathematical domain of the operation."""
