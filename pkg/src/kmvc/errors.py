"""Exception hierarchy shared by the sketch, codec and entropy modules."""

from __future__ import annotations


class KMVError(Exception):
    """Base class for every error raised by this package."""


class ConfigMismatchError(KMVError, ValueError):
    """Two sketches (or a sketch and a blob) disagree on k or hash seed."""


class CodecError(KMVError, ValueError):
    """Base class for encoding and decoding failures."""


class NotSortedError(CodecError):
    pass


class OutOfRangeError(CodecError):
    pass


class EmptyInputError(CodecError):
    pass


class BadMagicError(CodecError):
    pass


class BadVersionError(CodecError):
    pass


class TruncatedError(CodecError):
    pass


class CorruptError(CodecError):
    pass


class DomainError(KMVError, ValueError):
    """Entropy-model parameters outside the region where a formula is defined."""


class OverflowGuardError(KMVError, ValueError):
    """An exact oracle was asked to enumerate a space larger than its limit."""
