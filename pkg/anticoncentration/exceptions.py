"""Custom exceptions for the anti-concentration toolkit."""

from typing import Optional


class AntiConcentrationError(Exception):
    """Base exception for all toolkit errors."""
    pass


class ValidationError(AntiConcentrationError):
    """Raised when input validation fails."""
    pass


class DimensionMismatchError(ValidationError):
    """Raised when a vector does not match the dimension of a body or system."""

    def __init__(self, expected: int, got: int, what: str = "vector"):
        self.expected = expected
        self.got = got
        super().__init__(f"{what} has dimension {got}, expected {expected}")


class InvalidBodyError(ValidationError):
    """Raised when a star-shaped body is malformed or cannot be evaluated."""
    pass


class InvalidNoiseModelError(ValidationError):
    """Raised when a coefficient law is malformed."""
    pass


class ConfigurationError(ValidationError):
    """Raised when an experiment configuration is invalid."""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class BudgetExceededError(AntiConcentrationError):
    """Raised when an enumeration or grid would exceed its budget."""

    def __init__(self, resource: str, requested: float, budget: float):
        self.resource = resource
        self.requested = requested
        self.budget = budget
        super().__init__(
            f"{resource} budget exceeded: requested {requested:,.0f}, "
            f"budget {budget:,.0f}"
        )
