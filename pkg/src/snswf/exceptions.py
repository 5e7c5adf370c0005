"""Exception types raised by the snswf library.

Argument errors (bad shapes, out-of-range parameters) raise plain
``ValueError``; the classes below mark data- or numerics-driven failures
that callers may want to handle distinctly.
"""


class SnswfError(Exception):
    """Base class for all snswf-specific errors."""


class CsvParseError(SnswfError):
    """A CSV cell or row could not be parsed; carries line/column context."""

    def __init__(self, message: str, line: int | None = None, column: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column!r}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(message + suffix)
        self.line = line
        self.column = column


class CsvFormatError(SnswfError):
    """The CSV parsed but violates the record schema (e.g. non-uniform time grid)."""


class DegenerateInputError(SnswfError):
    """Input series carries no usable variance (e.g. constant data)."""


class DegenerateWhiteningError(SnswfError):
    """A retained eigenvalue sits at or below the estimated noise floor."""


class SingularSystemError(SnswfError):
    """Normal equations are not positive definite; increase regularization."""


class SingularSpectrumError(SnswfError):
    """A spectral density or transfer denominator vanishes on the grid."""


class UndefinedSnrError(SnswfError):
    """SNR is undefined because a band peak has zero power."""
