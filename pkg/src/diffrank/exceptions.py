"""Exception hierarchy shared across the package.

Everything raised on purpose derives from :class:`DiffRankError`, so callers
(notably the CLI) can map any metric or format problem to a single failure
class while OS-level problems (missing files, permissions) keep their builtin
types.
"""

from __future__ import annotations


class DiffRankError(Exception):
    """Base class for all errors raised by this package."""


class DataError(DiffRankError):
    """Numeric input that violates a metric precondition."""


class NonFiniteInput(DataError):
    """An input array contains NaN or infinite entries."""


class DegenerateInput(DataError):
    """Too few usable token vectors remain to build a covariance matrix."""


class SpectrumDivergence(DataError):
    """Covariance eigenvalues violate their normalization contract.

    Raised when the clipped eigenvalue mass deviates from 1 by more than the
    tolerated rounding budget, or when an eigenvalue is negative beyond what a
    symmetric solver can produce on positive semi-definite input. Either case
    points at a broken solver or corrupted data, not at ordinary noise.
    """


class ZeroMatrix(DataError):
    """Effective rank of an all-zero matrix is undefined."""


class EmptySequence(DataError):
    """A log-probability sequence with no entries."""


class SentenceSetMismatch(DataError):
    """Two dataset summaries do not cover the same sentence ids."""

    def __init__(self, only_first, only_second):
        self.only_first = sorted(only_first)
        self.only_second = sorted(only_second)
        parts = []
        if self.only_first:
            parts.append(f"{len(self.only_first)} only in first: {self._preview(self.only_first)}")
        if self.only_second:
            parts.append(f"{len(self.only_second)} only in second: {self._preview(self.only_second)}")
        super().__init__("sentence sets differ; " + "; ".join(parts))

    @staticmethod
    def _preview(ids, limit=5):
        shown = ", ".join(ids[:limit])
        return shown + (", ..." if len(ids) > limit else "")


class FormatError(DataError):
    """A file violates one of the on-disk format contracts."""


class MalformedHeader(FormatError):
    """A tensor file header cannot be parsed or declares unsupported content."""


class ShapeMismatch(FormatError):
    """A tensor file declares a shape outside the supported ranks or values."""


class TruncatedPayload(FormatError):
    """A tensor file payload length disagrees with its header."""


class SchemaViolation(FormatError):
    """A manifest or report violates its JSON schema.

    ``pointer`` locates the offending field with a JSON-pointer-style path
    such as ``/entries/3/token_count``.
    """

    def __init__(self, pointer: str, message: str):
        self.pointer = pointer
        super().__init__(f"{pointer or '/'}: {message}")


class DuplicateSentenceId(SchemaViolation):
    """A manifest lists the same sentence_id more than once."""
