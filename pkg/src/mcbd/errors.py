"""Exception types shared across the solvers."""


class NumericFailure(RuntimeError):
    """A numerical kernel failed (non-convergence, lost definiteness, ...)."""


class SingularMatrixError(NumericFailure):
    """A matrix that must be inverted has no eigenvalue above the floor.

    Raised by the PSD inverse square root when every eigenvalue falls below
    the jitter level; inside the dual loop this signals a dual point where
    the inner problem is unbounded.
    """


class UnboundedDualError(RuntimeError):
    """The inner maximization is unbounded at the queried dual point."""

    def __init__(self, user: int):
        super().__init__(f"inner problem unbounded at user {user}")
        self.user = user


class InfeasibleConfigError(ValueError):
    """The requested dimensions admit no zero-forcing solution."""
