"""Exception types raised by the package."""


class ValidationError(ValueError):
    """Input violates a structural precondition (shape, symmetry, sign, ...)."""


class ConvergenceError(RuntimeError):
    """A numerical routine failed to reach its tolerance."""


class NotMultiplexError(ValidationError):
    """A multiplex-only operation received a network with varying vertex sets."""
