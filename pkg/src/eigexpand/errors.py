"""Exception hierarchy.

``ValidationError`` covers bad inputs (CLI exit code 2), ``DegeneracyError``
covers numerically degenerate situations such as repeated eigenvalues or
vanishing variances (CLI exit code 3).
"""


class EigexpandError(Exception):
    """Base class for all package errors."""


class ValidationError(EigexpandError, ValueError):
    """Invalid argument or precondition violation."""


class GridError(ValidationError):
    """Invalid grid, or objects living on different grids."""


class AliasingError(ValidationError):
    """Too many Fourier modes for the grid resolution."""


class UnsupportedModelError(ValidationError):
    """Operation not implemented for the requested model kind."""


class DegeneracyError(EigexpandError, ArithmeticError):
    """Numerical degeneracy: repeated eigenvalues, zero variance, ..."""


class NegativeEigenvalueError(DegeneracyError):
    """A kernel expected to be positive semidefinite is not."""


class AmbiguousSignError(DegeneracyError):
    """An eigenfunction is orthogonal to its reference, sign undefined."""


class TruncationError(DegeneracyError):
    """Eigenvalues fell below the ridge floor.

    Attributes
    ----------
    admissible : int
        Largest truncation level (count of components) that is admissible.
    """

    def __init__(self, message, admissible):
        super().__init__(message)
        self.admissible = admissible
