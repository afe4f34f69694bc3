"""Exception hierarchy shared across the package.

Two top-level families so callers (and the CLI exit-code mapping) can tell
"you asked for something invalid" apart from "the data cannot support it".
"""


class ForumstrataError(Exception):
    """Base class for all package errors."""


class ValidationError(ForumstrataError):
    """Caller supplied invalid arguments or configuration."""


class DataError(ForumstrataError):
    """The input data violates a precondition of the requested operation."""


class IngestError(DataError):
    """A corpus record could not be ingested; carries the 1-based line number."""

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class EmptyPopulationError(DataError):
    """A selection rule matched zero posts."""


class NotFoundError(DataError):
    """A referenced entity (member, sample, annotator, ...) does not exist."""


class InfeasibleError(ValidationError):
    """The requested computation is refused as computationally infeasible."""


class BinExhaustedError(DataError):
    """A stratum ran out of posts before its quota was met."""

    def __init__(self, bin_index: int, quota: int, available: int):
        self.bin_index = bin_index
        self.quota = quota
        self.available = available
        self.shortfall = quota - available
        super().__init__(
            f"bin {bin_index} exhausted: quota {quota}, only {available} posts "
            f"available (shortfall {self.shortfall})"
        )
