"""Exception hierarchy for the HypoXG toolkit.

Every failure carries a category and the exit code the command line
reports for it.
"""


class HypoXGError(Exception):
    """Base class for all toolkit errors."""

    category = 'numeric'
    exit_code = 4

    def describe(self) -> str:
        """One-line diagnostic prefixed with the error category."""
        return f'{self.category}: {self}'


class ConfigError(HypoXGError):
    """Invalid run configuration, flag combination or setting."""

    category = 'config'
    exit_code = 2


class DataError(HypoXGError, ValueError):
    """Unusable observation data."""

    category = 'data'
    exit_code = 3

    def __init__(self, message: str, line: int = None):
        self.line = line
        if line is not None:
            message = f'line {line}: {message}'
        super().__init__(message)


class NumericError(HypoXGError, ValueError):
    """Evaluation outside a function's domain or validity region."""

    category = 'numeric'
    exit_code = 4


class SeparationError(NumericError):
    """Two rates of a parameter vector are closer than the separation floor."""


class BudgetError(HypoXGError, ArithmeticError):
    """An iterative routine exhausted its budget before meeting its tolerance."""

    category = 'budget'
    exit_code = 4
