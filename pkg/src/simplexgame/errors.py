"""Exception types shared across the package."""


class ValidationError(ValueError):
    """An input violates a documented invariant (bad strengths, shapes, ranges)."""


class DegenerateStrengthsError(ValidationError):
    """The strength distribution is too close to a face of the simplex to encode."""


class BudgetError(ValidationError):
    """An exhaustive computation would exceed its configured size budget."""
