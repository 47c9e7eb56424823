"""Exception hierarchy shared by the library and the CLI.

Each class carries the process exit code the CLI maps it to.
"""


class ComebackError(Exception):
    exit_code = 1


class ParameterError(ComebackError, ValueError):
    """Invalid argument or configuration value."""

    exit_code = 2


class DataError(ComebackError):
    """Input data cannot support the requested computation."""

    exit_code = 3


class NumericError(ComebackError, ArithmeticError):
    """Degenerate numerics or optimizer failure."""

    exit_code = 4
