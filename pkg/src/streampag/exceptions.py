"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class SingularMatrixError(ArithmeticError):
    """A matrix stayed numerically singular after ridge escalation."""


class InsufficientDataError(RuntimeError):
    """An estimate was requested before enough data has been seen."""


class GenerationError(RuntimeError):
    """Random model generation exhausted its retry budget."""
