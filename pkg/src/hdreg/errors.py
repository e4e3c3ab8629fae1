class InvalidInputError(ValueError):
    """Raised when an argument violates an operation's precondition."""


class ExcludedIndexError(InvalidInputError):
    """Raised when a truncation index falls outside the numerical rank."""


class NumericalError(ArithmeticError):
    """Raised when a numerical routine fails; ``residual`` holds the last residual if known."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
