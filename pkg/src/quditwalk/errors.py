"""Exception hierarchy shared by every quditwalk module."""


class QuditWalkError(Exception):
    """Base class for all library errors."""


class InvalidParameterError(QuditWalkError, ValueError):
    """A numeric parameter is non-finite or outside its documented range."""


class DimensionMismatchError(QuditWalkError, ValueError):
    """Two objects that must share a lattice or dimension do not."""


class ZeroProbabilityError(QuditWalkError):
    """A post-selection has (numerically) zero success probability."""


class ZeroVectorError(QuditWalkError, ValueError):
    """An amplitude vector has zero norm and cannot be normalized."""


class NonOrthonormalBasisError(QuditWalkError, ValueError):
    """A measurement basis fails the orthonormality check."""


class InfeasibleTargetError(QuditWalkError):
    """A target has support the walk can never populate."""


class UnsupportedConfigurationError(QuditWalkError):
    """A valid but unsupported device configuration was requested."""


class DomainError(QuditWalkError, ValueError):
    """A closed-form expression was evaluated outside its validity domain."""
