"""Exception hierarchy for the hand-geometry pipeline."""


class HandGeomError(Exception):
    """Base class for every error raised by handgeom."""


class DimensionError(HandGeomError, ValueError):
    pass


class ParameterError(HandGeomError, ValueError):
    pass


class DegenerateHistogramError(HandGeomError, ValueError):
    """Raised when an image histogram admits no two-class split."""


class ImageFormatError(HandGeomError, ValueError):
    """Corrupt or unsupported Netpbm file."""


class NoHandError(HandGeomError):
    pass


class MalformedSilhouetteError(HandGeomError):
    pass


class AmbiguousOrientationError(HandGeomError):
    pass


class AmbiguousHandTypeError(HandGeomError):
    pass


class FingersTouchingError(HandGeomError):
    pass


class MalformedContourError(HandGeomError):
    pass


class DegenerateFingerError(HandGeomError):
    pass


class FingerOcclusionError(HandGeomError):
    pass


class EmptyDatabaseError(HandGeomError):
    pass


class UnknownIdentityError(HandGeomError, KeyError):
    def __str__(self):
        # KeyError quotes its argument; keep messages readable
        return Exception.__str__(self)


class DuplicateIdentityError(HandGeomError):
    pass


class DatabaseFormatError(HandGeomError, ValueError):
    pass


class InsufficientSamplesError(HandGeomError, ValueError):
    pass


class InvalidSpecError(HandGeomError, ValueError):
    pass
