"""Exception hierarchy shared across the package."""


class KhopError(Exception):
    """Base class for every error raised by this library."""


class AtomSpaceMismatch(KhopError):
    """Operands live over different atom spaces."""


class DivisionBySingular(KhopError):
    """Division by a ring element that vanishes on some atom."""


class NotNonnegative(KhopError):
    """A nonnegative ring element was required."""


class NotReal(KhopError):
    """A real ring element was required."""


class LengthMismatch(KhopError):
    """A family does not have the expected number of entries."""


class ModuleMismatch(KhopError):
    """Vectors or operators belong to incompatible module spaces."""


class NotDisjoint(KhopError):
    """The two parts of a norm decomposition overlap."""


class NotADecomposition(KhopError):
    """The given parts do not sum to the vector's norm."""


class NotHomogeneous(KhopError):
    """Constant per-atom rank or dimension was required."""


class EmptyFiber(KhopError):
    """Some atom carries a zero-dimensional fiber."""


class NotADerivation(KhopError):
    """The map violates the product rule."""


class NotAutomorphism(KhopError):
    """The map is not a multiplicative bijection of the algebra."""


class DegenerateImageProjection(KhopError):
    """The image of the reference projection vanishes on some atom."""


class NotAProjection(KhopError):
    """An idempotent self-adjoint operator was required."""


class NotRankOne(KhopError):
    """Per-atom rank one was required."""


class NotInBlockAlgebra(KhopError):
    """The operator does not belong to the component-diagonal algebra."""


class NotStarIsomorphism(KhopError):
    """The map is not a star-preserving algebra isomorphism."""


class ComponentMismatch(KhopError):
    """Per-atom component assignment fails to be a bijection."""


class DimensionMismatch(KhopError):
    """Matched components have different fiber dimensions on some atom."""


class ShapeMismatch(KhopError):
    """Operator shapes are incompatible with the claimed implementation."""


class InvalidParams(KhopError):
    """Generator parameters out of range."""


class ParseError(KhopError):
    """A document could not be parsed."""


class ValidationError(KhopError):
    """A parsed document violates the schema; message carries the location."""
