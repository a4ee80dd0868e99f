"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid grid, motion, scene or optimizer configuration."""


class ValidationError(ValueError):
    """A value violates a documented invariant (e.g. a non-rigid pose)."""


class DimensionError(ValueError):
    """Array or matrix sizes do not agree."""


class NumericalError(ArithmeticError):
    """Non-finite values appeared during a computation."""


class OracleMismatch(RuntimeError):
    """Matrix and quadrature collision measures disagree beyond tolerance."""
