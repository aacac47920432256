"""Model description language: parsing, validation, scoring and simulation."""
from .ast import Program
from .errors import (BindingError, DuplicateParameter, MDLError, MDLIndexError,
                     MDLSyntaxError, NameConflict, NumericsError, ShapeError,
                     StepBudgetExceeded, UnknownIdentifier, UnusedParameter,
                     ValidationError)
from .library import library_names, load_library, template_for
from .parser import parse_syntax
from .printer import to_source
from .runtime import (STEP_BUDGET, ModelProgram, ParameterSpec, evaluate_nll, parse,
                      simulate)

__all__ = [
    "Program", "ModelProgram", "ParameterSpec", "parse", "parse_syntax", "to_source",
    "evaluate_nll", "simulate", "load_library", "library_names", "template_for",
    "STEP_BUDGET", "MDLError", "MDLSyntaxError", "ValidationError", "DuplicateParameter",
    "UnknownIdentifier", "UnusedParameter", "NameConflict", "ShapeError", "BindingError",
    "NumericsError", "MDLIndexError", "StepBudgetExceeded",
]
