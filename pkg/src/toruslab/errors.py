"""Exception hierarchy shared across the package."""


class ToruslabError(Exception):
    """Base class for all package errors."""


class DomainError(ToruslabError):
    """Input violates a mathematical precondition (exit code 1 territory)."""


class InputError(ToruslabError):
    """Malformed file or argument (exit code 2)."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ResourceError(ToruslabError):
    """Computation exceeds the supported desk-scale envelope."""


class NumericalError(ToruslabError):
    """Iteration failed to converge (exit code 3)."""


class InfeasibleError(DomainError):
    """A feasibility search proved the system has no solution.

    Carries the dual certificate: nonnegative weights on the violated
    inequalities combining to a contradiction.
    """

    def __init__(self, message, certificate):
        self.certificate = certificate
        super().__init__(message)
