"""Exception hierarchy shared by all monarch modules."""


class MonarchError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(MonarchError):
    """Operand shapes are incompatible."""


class BadBlocking(MonarchError):
    """Block sizes do not divide the dimensions, or block/grid ratios disagree."""


class UnsupportedBlocking(MonarchError):
    """The requested rectangular blocking has no supported conversion path."""


class BadSize(MonarchError):
    """Size must be a power of two for butterfly/transform constructions."""


class IndexOutOfRange(MonarchError):
    """A flat index fell outside [0, n)."""


class SingularMatrix(MonarchError):
    """A pivot fell below the singularity threshold during LU elimination."""


class NoConvergence(MonarchError):
    """An iterative solver exhausted its sweep/iteration budget."""


class DefectiveMatrix(MonarchError):
    """Eigenvector matrix too ill-conditioned: input is (numerically) not diagonalizable."""


class SingularBlock(MonarchError):
    """A permuted block was singular: the factorization's assumption 1
    (no zero entries in the middle factor's blocks, invertible blocks) fails."""


class SimDiagFailed(MonarchError):
    """No common eigenbasis found to tolerance: the family is not
    simultaneously diagonalizable, or the input is not an MM* matrix."""


class ParseError(MonarchError):
    """A matrix file is malformed."""
