"""Exception hierarchy shared by all polyquad modules."""


class PolyquadError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateFace(PolyquadError):
    """A face's vertices do not span the declared dimension."""


class AssumptionViolated(PolyquadError):
    """The affine hulls of two faces intersect or their direction spaces overlap."""


class DegenerateHull(PolyquadError):
    """The convex hull of two faces has numerically vanishing measure."""


class AssumptionPSViolated(PolyquadError):
    """A face without singular vertices touches the singular plane."""


class BadConformity(PolyquadError):
    """The two polytopes disagree on their declared shared vertices."""


class InvalidExponent(PolyquadError):
    """Non-integrable Jacobi exponent (must be > -1)."""


class DomainError(PolyquadError):
    """Argument outside the mathematical domain of a special function."""


class ParseError(PolyquadError):
    """Malformed input file."""


class ValidationError(PolyquadError):
    """An ingested quadrature rule failed its declared-exactness or sanity checks."""


class DimensionMismatch(PolyquadError):
    """Rule and face dimensions disagree."""


class IntegrabilityViolated(PolyquadError):
    """Kernel exponent too strong for some piece's base dimension (alpha >= r + 1)."""


class DegenerateBase(PolyquadError):
    """Base face pair comes numerically too close; the folded weight would blow up."""


class NonFiniteValue(PolyquadError):
    """The integrand returned a non-finite value at a quadrature node."""


class UnknownKernel(PolyquadError):
    """Unrecognized builtin kernel name."""


class BudgetExceeded(PolyquadError):
    """Reference integration failed to stabilize within the allowed work budget."""
