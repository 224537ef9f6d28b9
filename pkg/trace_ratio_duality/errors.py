class InstanceValidationError(ValueError):
    """An input violates a modelling assumption (shape, symmetry, definiteness)."""


class NumericalError(RuntimeError):
    """A numerical routine failed to converge or hit a degenerate case.

    Args:
        message: Human readable description
        details: Optional diagnostics (iteration history, residuals, last basis)
    """

    def __init__(self, message: str, details: dict | None = None):
        super().__init__(message)
        self.details = details or {}


class BoundaryDegeneracyError(NumericalError):
    """Neither S-lemma alternative could be built because the vertex value sits on zero."""
