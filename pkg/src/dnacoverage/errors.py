"""Exception types shared across the package.

Everything derives from :class:`CoverageError` so callers (and the CLI) can
map failures to exit codes without catching unrelated exceptions.
"""


class CoverageError(Exception):
    exit_code = 2


class DomainError(CoverageError, ValueError):
    """An argument lies outside the domain of the operation."""


class InsufficientDataError(CoverageError, ValueError):
    pass


class ParseError(CoverageError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicateIdError(ParseError):
    pass


class EmptyInputError(ParseError):
    pass


class UnreachableTargetError(CoverageError):
    """The requested recovered-strand count is never attained at finite K."""


class InfeasibleError(CoverageError):
    pass


class SizeError(CoverageError):
    pass


class NoPeakError(CoverageError):
    pass


class AccuracyError(CoverageError):
    def __init__(self, message, estimate=None, error_bound=None):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


class DegenerateResultError(CoverageError):
    exit_code = 3
