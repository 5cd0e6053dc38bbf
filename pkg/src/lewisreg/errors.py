"""Exception types shared across the package."""


class DegenerateMatrixError(ValueError):
    """Input matrix is unusable: all-zero, rank deficient where full rank is required."""


class BudgetExceededError(RuntimeError):
    """A label query would exceed the configured query budget."""
