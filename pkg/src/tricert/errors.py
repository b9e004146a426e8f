"""Exception types raised across the package.

Every error derives from :class:`TricertError` so callers can catch the
whole family at once; the more specific classes also inherit from the
closest builtin (``ValueError``, ``IndexError``) where that reads naturally.
"""


class TricertError(Exception):
    """Base class for all package errors."""


# geometry kernel
class DimensionMismatch(TricertError, ValueError):
    pass


class ZeroVector(TricertError, ValueError):
    pass


# simplices
class IndexOutOfRange(TricertError, IndexError):
    pass


class DegenerateSimplex(TricertError, ValueError):
    pass


class PointOffAffineHull(TricertError, ValueError):
    pass


class NotFullDimensional(TricertError, ValueError):
    pass


class XiOutOfRange(TricertError, ValueError):
    pass


# complexes
class UnknownSimplex(TricertError, KeyError):
    pass


class UnknownVertex(TricertError, KeyError):
    pass


class NotPure(TricertError, ValueError):
    pass


class BadDimension(TricertError, ValueError):
    pass


class PointOutsideStar(TricertError, ValueError):
    pass


# distortion calculus
class DegenerateDomain(TricertError, ValueError):
    pass


class XiNotLessThanOne(TricertError, ValueError):
    pass


class StepTooSmall(TricertError, ValueError):
    pass


class SpectrumBoundViolated(TricertError, ValueError):
    pass


class VertexNotFixed(TricertError, ValueError):
    pass


# degree theory
class DegenerateImage(TricertError, ValueError):
    pass


class PointOnSkeletonImage(TricertError, ValueError):
    pass


class SamplingFailed(TricertError, RuntimeError):
    pass


class NotSimplexwisePositive(TricertError, ValueError):
    pass


# manifolds
class OnMedialAxis(TricertError, ValueError):
    pass


class PointNotOnManifold(TricertError, ValueError):
    pass


class HypothesisViolated(TricertError, ValueError):
    pass


class SimplexLeavesTube(TricertError, ValueError):
    pass


# charts
class ProjectedStarNotEmbedded(TricertError, ValueError):
    pass


class StarNotFull(TricertError, ValueError):
    pass


class PointOutsideChart(TricertError, ValueError):
    pass


class PreconditionViolated(TricertError, ValueError):
    """A hypothesis of a distortion bound does not hold.

    ``inequality`` names the failed condition and ``margin`` is
    ``rhs - lhs`` (negative when violated).
    """

    def __init__(self, message, inequality="", margin=float("nan")):
        super().__init__(message)
        self.inequality = inequality
        self.margin = margin


# certifier
class InputNotManifold(TricertError, ValueError):
    pass


class VerticesOffManifold(TricertError, ValueError):
    pass


class ComponentWithoutVertex(TricertError, ValueError):
    pass


class NumericallyUnstableJacobian(TricertError, ValueError):
    pass


class DeltaOutOfWindow(TricertError, ValueError):
    pass


# mesh generation
class BadRecipe(TricertError, ValueError):
    pass


# file formats
class ComplexFileError(TricertError, ValueError):
    pass
