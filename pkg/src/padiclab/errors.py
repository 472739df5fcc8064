"""Exception types shared across the package."""


class PrecisionError(ArithmeticError):
    """A result depends on p-adic digits beyond the tracked precision."""


class DomainError(ValueError):
    """An argument lies outside the region where an operation is defined."""


class InequalityViolation(AssertionError):
    """A verified inequality or identity failed; ``details`` holds the counterexample."""

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = details or {}


class SizeConditionError(ValueError):
    """The point set is too small for the requested regularization parameters."""
