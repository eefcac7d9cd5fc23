__all__ = [
    'IllegalArgumentException',
    'IllegalStateException',
    'UnsupportedDimensionException',
    'PrecisionException',
    'CacheCorruptedException',
    'ManifestException'
]


class IllegalArgumentException(ValueError):
    """
    Thrown when a method is passed an illegal or inappropriate argument.
    """


class IllegalStateException(Exception):
    """
    Thrown when a method has been invoked at an inappropriate time or the state of an object
    is not appropriate for the requested operation.
    """


class UnsupportedDimensionException(IllegalArgumentException):
    """
    Thrown when a computation is requested on a ball dimension that has no quadrature support.
    """


class PrecisionException(IllegalStateException):
    """
    Thrown when a quadrature rule is too coarse for the requested integrand, so the result
    can not be trusted to the advertised tolerance.
    """


class CacheCorruptedException(IllegalStateException):
    """
    Thrown when a cached rule or norm table does not match its recorded checksum.
    """


class ManifestException(IllegalArgumentException):
    """
    Thrown when an experiment manifest can not be parsed or validated.
    """
