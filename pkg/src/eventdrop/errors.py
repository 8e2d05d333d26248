"""Typed errors raised across the library.

Every failure mode that can be triggered by user data is a subclass of
EventDropError; nothing in the library intentionally raises a bare
ValueError on malformed input files.
"""


class EventDropError(Exception):
    """Base class for all library errors."""


class CoordinateOutOfRange(EventDropError):
    """An event lies outside the [0, W) x [0, H) sensor area."""


class InvalidPolarity(EventDropError):
    """Polarity is not -1 or +1."""


class InvalidTimestamp(EventDropError):
    """Timestamp is negative."""


class TruncatedFile(EventDropError):
    """Binary input length is not a whole number of records."""


class FieldOverflow(EventDropError):
    """A value does not fit the bit width of its on-disk field."""


class ParseError(EventDropError):
    """Malformed text input; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class UnsupportedDtype(EventDropError):
    """Tensor container only carries 32-bit floats."""


class ZeroDuration(EventDropError):
    """The operation needs a positive stream duration."""


class UnsupportedShape(EventDropError):
    """Grid cannot be reduced to a renderable shape."""


class ConfigError(EventDropError):
    """Invalid pipeline configuration."""
