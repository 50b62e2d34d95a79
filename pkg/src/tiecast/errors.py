"""Exception hierarchy shared by every tiecast module."""


class TiecastError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(TiecastError, ValueError):
    """Malformed input text. Carries the offending line number when known."""

    def __init__(self, message, lineno=None, source=None):
        self.lineno = lineno
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)


class DomainError(TiecastError, ValueError):
    """Input is well formed but violates a precondition."""


class DivergenceError(TiecastError, ArithmeticError):
    """Gradient descent produced a non-finite loss or gradient."""

    def __init__(self, message, iteration=None):
        self.iteration = iteration
        super().__init__(message)
