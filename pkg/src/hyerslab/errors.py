"""Exception types shared across the package."""


class InputDomainError(ValueError):
    """An argument is outside the domain an operation is defined on."""


class ConfigError(ValueError):
    """A malformed experiment config; carries the offending field name."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"config field '{field}': {message}")


class IterationOverflowError(RuntimeError):
    """The scaled argument 3^n * x left the trusted range.

    ``last_safe_n`` is the largest depth whose argument stays within the cap.
    """

    def __init__(self, message: str, last_safe_n: int):
        self.last_safe_n = last_safe_n
        super().__init__(message)


class DivergentSeriesError(ValueError):
    """A control-function series has ratio >= 1 and cannot be summed."""


class NonConvergedError(RuntimeError):
    """An extraction did not converge where a converged one is required."""


class BudgetViolationError(AssertionError):
    """A test function strayed further from its declared affine core than
    its certified perturbation budget allows."""
