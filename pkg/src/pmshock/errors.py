"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: ValidationError -> 1, DataError -> 2,
NumericalError -> 3.
"""


class PmshockError(Exception):
    """Base class for all package errors."""


class ValidationError(PmshockError):
    """Bad configuration or invalid arguments."""


class DataError(PmshockError):
    """Input data violates a documented precondition or schema."""


class NumericalError(PmshockError):
    """An estimator failed (rank deficiency, separation, no variation)."""


class CollinearityError(NumericalError):
    """Regressor matrix is rank deficient; names the offending column."""

    def __init__(self, column: str):
        self.column = column
        super().__init__(f"collinear regressor: {column}")


class SeparationError(NumericalError):
    """Logit likelihood is unbounded (perfect separation)."""
