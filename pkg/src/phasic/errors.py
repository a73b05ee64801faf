"""Exception taxonomy shared across the package.

Every phasic-raised error derives from PhasicError so callers can catch the
whole family with one clause; the CLI maps them to exit code 2.
"""


class PhasicError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(PhasicError):
    """Malformed container or file header (WAV, model file magic)."""


class UnsupportedError(PhasicError):
    """Well-formed input using a codec/bit depth/rate we do not handle."""


class RangeError(PhasicError):
    """Argument outside its documented range."""


class TooShortError(PhasicError):
    """Signal shorter than one analysis frame."""


class ShapeError(PhasicError):
    """Tensor or matrix dimensions incompatible with the operation."""


class NumericError(PhasicError):
    """NaN/Inf where finite values are required."""


class StateError(PhasicError):
    """Stale or mismatched cache/state passed to an operation."""


class EmptyError(PhasicError):
    """Operation requires a nonempty collection."""


class IoError(PhasicError):
    """Storage read/write failure."""


class DataError(PhasicError):
    """Dataset violates a training precondition (e.g. missing class)."""


class VersionError(PhasicError):
    """Serialized format version not supported by this build."""


class CorruptError(PhasicError):
    """Truncated or checksum-failing serialized payload."""
