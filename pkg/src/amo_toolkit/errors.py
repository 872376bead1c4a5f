"""Exception hierarchy shared by all toolkit modules.

Parameter problems derive from ``DomainError`` (a ``ValueError``); failures of
an iterative numerical method derive from ``NumericalFailure``.  The CLI maps
the two families to distinct exit codes.
"""


class ToolkitError(Exception):
    pass


class DomainError(ToolkitError, ValueError):
    """Input outside the domain of an operation."""


class UnsupportedError(DomainError):
    """Request for a code path the toolkit deliberately does not provide."""


class SizeError(DomainError):
    """Problem size above a documented cap."""


class CapacityZeroError(DomainError):
    """Set of zero logarithmic capacity (e.g. a single point)."""


class NumericalFailure(ToolkitError, ArithmeticError):
    pass


class DecompositionFailed(NumericalFailure):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class RootsFailed(NumericalFailure):
    def __init__(self, message, best=None, update=None):
        super().__init__(message)
        self.best = best
        self.update = update


class ProbeFailed(NumericalFailure):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result
