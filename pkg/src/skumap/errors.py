"""Exception hierarchy shared across the engine.

Everything raised on purpose by this package derives from SkuMapError so
callers (CLI, service) can map failures to exit codes / HTTP statuses in
one place.
"""


class SkuMapError(Exception):
    """Base class for all engine errors."""


# --- input validation -------------------------------------------------------

class EmptyTitle(SkuMapError):
    """A product title was empty or whitespace-only."""


class EmptyText(SkuMapError):
    """Text handed to the embedding provider was empty."""


class EmptyQuery(SkuMapError):
    """Search query was empty."""


class EmptyInput(SkuMapError):
    """An operation requiring non-empty input received an empty one."""


class LengthMismatch(SkuMapError):
    """Paired sequences had different lengths."""


# --- provider layer ---------------------------------------------------------

class ProviderUnavailable(SkuMapError):
    """Transient provider failure (network, HTTP 5xx) after bounded retries."""


class ProviderRefused(SkuMapError):
    """Non-retryable provider error (auth, bad request)."""


class StubMiss(ProviderUnavailable):
    """A strict scripted stub had no response for the request."""


class MalformedProviderOutput(SkuMapError):
    """Provider output did not parse under the strict response grammar."""


class NoEvidenceFound(SkuMapError):
    """Search produced nothing and evidence synthesis cannot proceed."""


# --- trace store ------------------------------------------------------------

class DimensionMismatch(SkuMapError):
    """Vectors of different dimensions were combined."""


class ZeroVector(SkuMapError):
    """Cosine similarity is undefined for an all-zero vector."""


class NoQuestions(SkuMapError):
    """A question set was empty where at least one question is required."""


class PersistenceFailure(SkuMapError):
    """The trace DB or review queue could not be read or written."""


# --- review queue -----------------------------------------------------------

class NotFound(SkuMapError):
    """No review item with the given id."""


class AlreadyDecided(SkuMapError):
    """The review item already left the pending state."""


# --- dataset ingestion ------------------------------------------------------

class FileUnreadable(SkuMapError):
    """Dataset file missing or unreadable."""


class FileUnwritable(SkuMapError):
    """Report destination could not be written."""


class MissingColumn(SkuMapError):
    """Dataset header lacks a required column."""


class BadLabel(SkuMapError):
    """Dataset row carries a label outside {0, 1}."""

    def __init__(self, row: int, value: str):
        super().__init__(f"row {row}: label must be 0 or 1, got {value!r}")
        self.row = row
        self.value = value


class EmptyTitleRow(EmptyTitle):
    """Dataset row carries an empty product title."""

    def __init__(self, row: int, column: str):
        super().__init__(f"row {row}: column {column!r} is empty")
        self.row = row
        self.column = column
