"""Exception hierarchy shared across the package."""


class LinftyError(Exception):
    """Base class for all errors raised by this package."""


class LengthMismatch(LinftyError):
    pass


class DegreeMismatch(LinftyError):
    pass


class AlgebraMismatch(LinftyError):
    pass


class ComplexMismatch(LinftyError):
    pass


class DegreeOutsideWindow(LinftyError):
    pass


class UnsafeWindow(LinftyError):
    """A windowed computation would be silently wrong at the current caps.

    Carries the list of offending degrees in ``unsafe_degrees``.
    """

    def __init__(self, message, unsafe_degrees=()):
        super().__init__(message)
        self.unsafe_degrees = tuple(unsafe_degrees)


class NotMaurerCartan(LinftyError):
    """Raised when an alleged MC element fails its equation.

    The nonzero residual is attached as ``residual`` (shape depends on the
    ambient: a derivation, a dgla element or a per-generator dict).
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NotASubspace(LinftyError):
    pass


class IdealViolation(LinftyError):
    pass


class NotAMorphism(LinftyError):
    pass


class SectionViolation(LinftyError):
    pass


class SupportOutsideAffine(LinftyError):
    pass


class AritySupport(LinftyError):
    pass


class InfinitePerDegree(LinftyError):
    pass


class RelationOutsideCap(LinftyError):
    pass


class ParseError(LinftyError):
    pass


class ValidationError(LinftyError):
    pass


class EnumerationGuard(LinftyError):
    """Raised when an enumeration would exceed LINFTY_MAX_DIM basis elements."""
