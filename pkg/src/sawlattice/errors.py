"""Exception types shared across the package."""


class BudgetExceeded(RuntimeError):
    """An exhaustive search or integration would exceed its configured budget."""


class InsufficientData(ValueError):
    """Not enough data points for the requested analysis."""


class DegenerateFit(ValueError):
    """Least-squares system is rank deficient."""


class BracketingError(RuntimeError):
    """A root bracket did not show the expected sign change."""
