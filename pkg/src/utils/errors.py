"""
Exception types for the GEMO toolkit and their command-line exit codes
"""

from typing import Any, Dict, Optional


class GemoError(Exception):
    """Base class for every error raised by the toolkit"""

    exit_code = 1


class ConfigError(GemoError):
    """An environment setting could not be parsed"""

    exit_code = 2


class UsageError(GemoError):
    """Invalid combination of options or arguments"""

    exit_code = 2


class ParameterDomainError(GemoError, ValueError):
    """A parameter or argument lies outside its admissible domain"""

    exit_code = 3


class DataError(GemoError):
    """
    A dataset could not be read

    Args:
        message: Human-readable description
        line: 1-based line number of the offending entry, if known
    """

    exit_code = 3

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(GemoError):
    """
    A numerical procedure failed (quadrature, divergence, underflow, Hessian)

    Args:
        message: Human-readable description
        diagnostics: Extra values describing the failure
    """

    exit_code = 4

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class SeriesConvergenceError(NumericalError):
    """The binomial series of the density does not converge for these parameters"""


class ConvergenceError(NumericalError):
    """
    No optimizer start produced a usable optimum

    Args:
        message: Human-readable description
        best: Best result found so far (may be None)
    """

    def __init__(self, message: str, best: Any = None, diagnostics: Optional[Dict[str, Any]] = None):
        self.best = best
        super().__init__(message, diagnostics)


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the process exit code"""
    if isinstance(error, GemoError):
        return error.exit_code
    return 1
