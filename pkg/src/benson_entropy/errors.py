"""Exception hierarchy shared by the solver modules."""


class BensonError(Exception):
    """Base class for all errors raised by this package."""


class NumericalFailure(BensonError):
    """The simplex solver could not recover from accumulated rounding errors."""


class UnboundedLP(BensonError):
    """A scalar LP that should be bounded turned out to be unbounded."""


class ParallelEdge(BensonError):
    """An edge is (numerically) parallel to the hyperplane it should cross."""


class SingularIncidence(BensonError):
    """The facets incident to a vertex do not determine a unique point."""


class CapacityExceeded(BensonError):
    """The outer polytope would exceed its configured vertex or facet limit."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class DegenerateCut(BensonError):
    """A cutting hyperplane does not strictly separate any current vertex."""


class EmptyRegion(BensonError):
    """The feasible region ``{x >= 0 : Ax = b}`` is empty."""


class ProbeInconsistent(BensonError):
    """A probe produced a result incompatible with ``q`` being interior."""


class SizeGuardExceeded(BensonError):
    """The brute-force oracle was asked to enumerate a too large instance."""


class CopyStringError(BensonError, ValueError):
    """Base class for copy-string parse and validation errors."""

    def __init__(self, message, position=None, text=None):
        self.position = position
        self.text = text
        if position is not None and text is not None:
            message = f"{message} at position {position}:\n  {text}\n  {' ' * position}^"
        super().__init__(message)


class CopySyntaxError(CopyStringError):
    pass


class ArityMismatch(CopyStringError):
    pass


class UnknownVariable(CopyStringError):
    pass


class DuplicateName(CopyStringError):
    pass


class ReconstructionFailure(BensonError):
    """A float could not be matched to a rational with bounded denominator."""
