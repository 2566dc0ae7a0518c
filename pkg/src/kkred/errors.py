"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes: config parse errors -> 2,
validation errors -> 3, solver errors -> 4.
"""


class KkredError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(KkredError):
    """A config file cannot be read or parsed (bad syntax, unknown key)."""


class ValidationError(KkredError, ValueError):
    """An input value or combination of values violates a documented constraint."""


class DegenerateGeometryError(ValidationError):
    """A radius is non-positive at a point where a positive radius is required."""


class SolverError(KkredError, RuntimeError):
    """A numerical procedure failed to reach its target (budget, bracketing, ...)."""
