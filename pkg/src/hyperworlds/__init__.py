"""Large-finite truncations of continuum quantum systems.

Builds finite orthonormal truncations of the one-dimensional continuum
state space, projects standard observables and Hamiltonians onto them,
decomposes states into worlds (eigenbranches with squared-amplitude
weights), checks the truncated dynamics and spectral measures against
closed-form standard theory, and runs relative-frequency and randomness
limit experiments over branch weights.  A small exact non-Archimedean
scalar field supports infinitesimal bookkeeping in examples and tests.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DomainError,
    HyperworldsError,
    NumericalError,
    UsageError,
)

__all__ = [
    "__version__",
    "ConfigError",
    "DomainError",
    "HyperworldsError",
    "NumericalError",
    "UsageError",
]
