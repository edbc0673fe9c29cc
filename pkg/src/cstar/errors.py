"""Exception hierarchy shared by the workbench modules.

The CLI maps the four families below onto its exit codes, so every error
raised by library code derives from exactly one of them.
"""


class WorkbenchError(Exception):
    """Base class for all workbench errors."""


class ParseError(WorkbenchError, ValueError):
    """Malformed text input (scalars, expressions, matrices, files)."""


class InconclusiveError(WorkbenchError):
    """A procedure could not certify its result within tolerance or budget."""


class ResourceError(WorkbenchError):
    """A configured resource cap was exceeded."""


# scalars
class DivisionByZero(WorkbenchError, ZeroDivisionError):
    pass


# starpoly
class RingMismatch(WorkbenchError, TypeError):
    pass


class MissingGenerator(WorkbenchError, KeyError):
    pass


class SizeMismatch(WorkbenchError, ValueError):
    pass


class MissingBound(WorkbenchError, KeyError):
    pass


# matrep
class NonConvergence(InconclusiveError):
    pass


class NotSelfAdjoint(WorkbenchError, ValueError):
    pass


class DependentInput(WorkbenchError, ValueError):
    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"vector {index} is dependent on its predecessors")


class NotAProjection(WorkbenchError, ValueError):
    pass


# abelian
class CoverFailure(ResourceError):
    pass


# groupalg
class BadTable(WorkbenchError, ValueError):
    pass


class BallOverflow(ResourceError):
    pass


# fdstruct
class NoUnit(InconclusiveError):
    pass


class ToleranceFailure(InconclusiveError):
    pass


class NotClosedUnderMultiplication(InconclusiveError):
    pass


class DegenerateChain(InconclusiveError):
    pass


class RingNotReal(WorkbenchError, ValueError):
    pass
