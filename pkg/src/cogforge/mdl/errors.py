"""Errors raised while parsing, validating or running model programs."""
from ..errors import CogforgeError


class MDLError(CogforgeError):
    """Base class; carries an optional (line, col) location."""

    def __init__(self, message, line=None, col=None):
        self.message = message
        self.line = line
        self.col = col
        loc = f"{line}:{col}: " if line is not None else ""
        super().__init__(loc + message)


class MDLSyntaxError(MDLError):
    def __init__(self, message, line, col, expected=None):
        self.expected = expected
        if expected:
            message = f"{message} (expected {expected})"
        super().__init__(message, line, col)


class ValidationError(MDLError):
    pass


class DuplicateParameter(ValidationError):
    pass


class UnknownIdentifier(ValidationError):
    pass


class UnusedParameter(ValidationError):
    pass


class NameConflict(ValidationError):
    pass


class ShapeError(MDLError):
    pass


class BindingError(MDLError):
    pass


class NumericsError(MDLError, ArithmeticError):
    pass


class MDLIndexError(MDLError, IndexError):
    pass


class StepBudgetExceeded(MDLError):
    pass
