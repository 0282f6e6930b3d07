"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where the function is defined."""


class DegenerateSpectrumError(DomainError):
    """A determinant formula was asked to evaluate a spectrum with repeated levels."""


class ConvergenceError(RuntimeError):
    """A numerical procedure stopped before reaching its tolerance.

    The achieved error estimate is kept on the instance so callers can decide
    whether the partial answer is usable.
    """

    def __init__(self, message: str, estimate: float = float("nan"), value: float = float("nan")):
        super().__init__(message)
        self.estimate = estimate
        self.value = value


class ConsistencyError(RuntimeError):
    """An internal cross-check (normalization, identity) failed."""
