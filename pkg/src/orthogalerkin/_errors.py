"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation accepts."""


class RangeError(OverflowError):
    """A result would exceed the representable floating-point range."""


class NumericError(ArithmeticError):
    """A numerical procedure failed to converge or produced non-finite values."""


class TruncationWarning(UserWarning):
    """A truncated integral has a tail estimate above the requested tolerance."""
