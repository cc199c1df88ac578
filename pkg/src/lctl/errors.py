"""Exception hierarchy.

Two umbrella classes drive the CLI exit codes: :class:`DataError`
(bad input, exit 2) and :class:`NumericalFailure` (exit 3).
"""


class LctlError(Exception):
    """Base class for all errors raised by this package."""


class DataError(LctlError, ValueError):
    """Invalid, inconsistent or unreadable input data."""


class DimensionMismatch(DataError):
    pass


class InvalidLabel(DataError):
    pass


class NonFinite(DataError):
    pass


class InvalidDims(DataError):
    pass


class InvalidArgs(DataError):
    pass


class Degenerate(DataError):
    """A class has no training samples."""


class LengthMismatch(DataError):
    pass


class IndexOutOfRange(DataError):
    pass


class EmptyMatrix(DataError):
    pass


class EmptyClass(DataError):
    pass


class ParseError(DataError):
    pass


class RaggedRows(ParseError):
    pass


class EmptyFile(ParseError):
    pass


class SizeMismatch(DataError):
    pass


class HeaderInvalid(DataError):
    pass


class GroundTruthDimsMismatch(DataError):
    pass


class ClassTooSmall(DataError):
    pass


class SchemaInvalid(DataError):
    pass


class FormatVersionUnsupported(SchemaInvalid):
    pass


class NumericalFailure(LctlError, ArithmeticError):
    """A factorization or decomposition broke down."""


class SingularTransform(NumericalFailure):
    pass
