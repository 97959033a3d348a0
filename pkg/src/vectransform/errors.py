"""Exception hierarchy.

Validation problems derive from both :class:`VTError` and :class:`ValueError`
so callers can catch either.  File-format problems derive from
:class:`FormatError`; the CLI maps those to the I/O exit code.
"""

from __future__ import annotations


class VTError(Exception):
    """Base class for all library errors."""


class ValidationError(VTError, ValueError):
    pass


class EmptyBoundaryError(ValidationError):
    """The boundary set is empty, so no nearest point exists."""


class AllBoundaryError(ValidationError):
    """A boundary pixel has no non-boundary neighbour to borrow a direction from."""


class ThickBoundaryError(AllBoundaryError):
    pass


class SingleLabelError(ValidationError):
    """A label map with one label induces no boundary."""


class DimensionMismatchError(ValidationError):
    pass


class EmptyMaskError(ValidationError):
    """A surface distance is undefined because one side has no pixels."""


class LengthMismatchError(ValidationError):
    pass


class EmptyIntersectionError(ValidationError):
    pass


class NoSourceError(ValidationError):
    """No pixel exceeds the source threshold, so there is no centroid region."""


class FormatError(VTError):
    """Base class for malformed files."""


class MalformedHeaderError(FormatError):
    pass


class DimensionOverflowError(FormatError):
    pass


class BadMagicError(FormatError):
    pass


class TruncatedPayloadError(FormatError):
    pass


class NonFiniteError(FormatError):
    pass
