"""Exception hierarchy shared across the package.

ValidationError covers bad user input (CLI exit code 2); everything else
surfaces as a runtime failure (exit code 1).
"""


class ValidationError(Exception):
    """Input violates a documented precondition or file contract."""


class ParseError(ValidationError):
    """A text input file could not be parsed; message carries file/line."""


class FormatError(ValidationError):
    """A structured file (embeddings, checkpoint, graph) is malformed."""


class DimensionError(ValidationError):
    """Matrix shapes do not conform for the requested operation."""
