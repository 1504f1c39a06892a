"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument violates a stated precondition (out-of-range index, pole, ...)."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to converge or produced an unusable result."""
