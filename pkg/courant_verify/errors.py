"""Exception types raised by the verification engine."""


class CourantVerifyError(Exception):
    """Base class for every error raised by courant_verify."""


class ChartMismatchError(CourantVerifyError, ValueError):
    """Operands live on different charts."""


class PoleError(CourantVerifyError, ValueError):
    """A rational function was evaluated where its denominator vanishes."""


class DimensionMismatchError(CourantVerifyError, ValueError):
    """Vector, matrix or relation dimensions do not fit together."""


class DegenerateFormError(CourantVerifyError, ValueError):
    """A bilinear form is degenerate where nondegeneracy is required."""


class BackendMismatchError(CourantVerifyError, ValueError):
    """Sections belong to different Courant backends."""


class RankDropError(CourantVerifyError):
    """A frame loses rank at a sample point or over the function field."""


class PreconditionError(CourantVerifyError):
    """An operation was called on data violating its precondition."""


class NotInSpanError(CourantVerifyError):
    """A section is not in the span of a frame.

    ``point`` is a rational sample point where membership fails and
    ``covector`` annihilates the frame there but not the section.
    """

    def __init__(self, message, point=None, covector=None, residual=None):
        super().__init__(message)
        self.point = point
        self.covector = covector
        self.residual = residual


class NonCleanCompositionError(CourantVerifyError):
    """Fiberwise intersection dimensions are not constant along the support."""

    def __init__(self, message, dimensions=None):
        super().__init__(message)
        self.dimensions = dimensions or {}


class ScenarioError(CourantVerifyError):
    """A scenario file does not match the schema."""

    def __init__(self, message, path=()):
        location = "/".join(str(p) for p in path)
        super().__init__(f"{location}: {message}" if location else message)
        self.path = tuple(path)


class UnresolvedReferenceError(ScenarioError):
    """A scenario refers to a name that was never defined."""
