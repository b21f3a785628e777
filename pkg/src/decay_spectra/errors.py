"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """An iterative numerical procedure failed to converge or lost an invariant."""
