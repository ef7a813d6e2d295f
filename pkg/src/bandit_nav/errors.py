"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An input violates a documented precondition or invariant."""


class NoPathError(RuntimeError):
    """The target vertex cannot be reached from the source vertex."""
