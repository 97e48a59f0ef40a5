"""Exception types raised by ringfold."""


class RingfoldError(Exception):
    """Base class for all library errors."""


class DomainError(RingfoldError, ValueError):
    """Input outside the domain of a map (e.g. nonpositive argument to h)."""


class Degenerate(RingfoldError):
    """Classification is numerically unreliable at this point."""


class StepFailure(RingfoldError):
    """Adaptive integration could not meet the requested tolerance."""

    def __init__(self, message: str, last_s: float | None = None):
        super().__init__(message)
        self.last_s = last_s


class DegreeViolation(RingfoldError):
    """A determinant pencil failed the affine (degree <= 1) check."""


class NoFeasibleSubset(RingfoldError):
    pass


class EmptyFeasibleFamily(RingfoldError):
    pass


class NoDirection(RingfoldError):
    """No positive null direction with negative quadratic form was found."""

    def __init__(self, message: str, best_residual: float | None = None):
        super().__init__(message)
        self.best_residual = best_residual


class UnsupportedSize(RingfoldError, ValueError):
    pass


class NoConvergence(RingfoldError):
    def __init__(self, message: str, best_residual: float | None = None, best=None):
        super().__init__(message)
        self.best_residual = best_residual
        self.best = best
