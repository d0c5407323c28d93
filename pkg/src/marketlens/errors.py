"""Exception hierarchy shared across the package.

Every error raised by marketlens derives from :class:`MarketLensError`, so
callers can catch one base type at the CLI / HTTP boundary. Errors that a
tool handler converts into observations (guard and query errors) are still
raised as exceptions at the datastore layer; the toolbox decides what the
agent gets to see.
"""

from __future__ import annotations


class MarketLensError(Exception):
    """Base class for all package errors."""


# --- ingestion -------------------------------------------------------------

class FetchError(MarketLensError):
    """A single document could not be fetched. ``kind`` is one of
    ``not_found``, ``network``, ``timeout``."""

    def __init__(self, kind: str, locator: str, message: str = ""):
        self.kind = kind
        self.locator = locator
        super().__init__(f"{kind}: {locator}" + (f": {message}" if message else ""))


class SourceError(MarketLensError):
    """The source itself is unenumerable (missing directory, unreachable host)."""


# --- extraction ------------------------------------------------------------

class ParseError(MarketLensError):
    """No decodable JSON object in the provider response."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        super().__init__(message)


class SchemaError(MarketLensError):
    """Decoded JSON does not satisfy the structured-job schema."""

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(message)


# --- enrichment / embeddings -----------------------------------------------

class DimensionMismatch(MarketLensError):
    """Two vectors with different dimensionality were combined."""


class DegenerateEmbedding(MarketLensError):
    """An embedding came back with zero norm and cannot be normalized."""


class LibraryFormatError(MarketLensError):
    """The skill-library file is malformed (duplicates, empty, bad JSON)."""


# --- providers ---------------------------------------------------------------

class ProviderError(MarketLensError):
    """Chat/embedding provider failure. ``kind`` is one of ``auth``,
    ``network``, ``timeout``, ``rate_limited``, ``script_exhausted``."""

    def __init__(self, kind: str, message: str):
        self.kind = kind
        super().__init__(f"{kind}: {message}")


# --- datastore ----------------------------------------------------------------

class GuardError(MarketLensError):
    """A statement was rejected by the read-only SQL guard.

    ``kind`` is one of ``write_statement``, ``multiple_statements``,
    ``engine_control``, ``empty``, ``unsupported``; ``token`` and ``offset``
    locate the offending token when one exists.
    """

    def __init__(self, kind: str, message: str, token: str = "", offset: int = -1):
        self.kind = kind
        self.token = token
        self.offset = offset
        super().__init__(message)


class QueryError(MarketLensError):
    """The SQL engine rejected an accepted query (unknown table, type error)."""


class QueryTimeout(MarketLensError):
    """Query execution exceeded the configured wall-clock cap."""


class EmptyIndex(MarketLensError):
    """Vector search was attempted with no stored embeddings."""


class StorageError(MarketLensError):
    """Persistence failure in the datastore."""


class InvalidRange(MarketLensError):
    """A date range with ``from`` after ``to`` (or an oversized span)."""


# --- agent runtime -----------------------------------------------------------

class DuplicateTool(MarketLensError):
    """A tool name was registered twice."""


class EmptyRegistry(MarketLensError):
    """The agent cannot run without any registered tools."""


class DirectiveParseError(MarketLensError):
    """Model output did not contain a valid agent directive.

    ``reason`` is machine-readable (used verbatim in the repair re-prompt),
    e.g. ``no_json_object`` or ``missing_fields:args,thought``.
    """

    def __init__(self, reason: str, message: str):
        self.reason = reason
        super().__init__(message)


# --- configuration -------------------------------------------------------------

class ConfigError(MarketLensError):
    """Invalid or unresolvable application configuration."""
