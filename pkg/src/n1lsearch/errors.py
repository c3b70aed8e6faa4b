"""Exception types shared across the package."""

from __future__ import annotations


class ZeroColumnError(ValueError):
    """A column with no incidence was found where a type was required."""


class InvalidConfigurationError(ValueError):
    """Operation requires a structurally valid configuration."""


class NotACosetError(ValueError):
    """Membership mask is not a right coset of any S4 subgroup."""


class TooLargeError(ValueError):
    """Input exceeds the guard limits of a brute-force oracle."""


class StageOverflowError(RuntimeError):
    """A search stage exceeded its storage budget.

    Carries the counts of all stages completed before the overflow, so a
    caller can still report partial results. The overflowing stage itself
    is discarded in full.
    """

    def __init__(self, message: str, completed_counts=None):
        super().__init__(message)
        self.completed_counts = completed_counts


class ParseError(ValueError):
    """Base class for configuration text-format errors."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class HeaderError(ParseError):
    """Malformed magic, size, or parts header line."""


class RowWeightError(ParseError):
    """A row does not have exactly 3 distinct columns."""


class ColumnRangeError(ParseError):
    """A row references a column index outside 0..c-1."""


class ClassRangeError(ParseError):
    """A row names a class outside 0..3."""


class PartitionMismatchError(ParseError):
    """Row class labels disagree with the declared partition sizes."""
