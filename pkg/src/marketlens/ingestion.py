"""Acquisition of raw postings from pluggable sources.

Three source kinds: a single file (a JSONL corpus or one ``.html``/``.txt``
document), a directory of ``.html``/``.txt`` documents, and a plain HTTP
page (single GET, no JavaScript). Documents are deduplicated by a content
key that covers both source URL and content, so identical text posted on
two portals stays two postings.

Corpus file format (JSONL, one document per line):

    {"source_url": str, "fetched_at": RFC3339 str, "content": str,
     "content_type": "html"|"text"}
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterator, Protocol

import httpx

from .domain import RawDocument
from .errors import FetchError, SourceError

__all__ = [
    "SourceSpec",
    "IngestReport",
    "ContentKey",
    "DocumentSink",
    "InMemorySink",
    "HttpFetcher",
    "fetch_document",
    "dedup_key",
    "ingest_source",
    "sniff_content_type",
]

_SOURCE_KINDS = ("file", "directory", "http")
_DOC_SUFFIXES = (".html", ".txt")

# Polite fixed delay between requests to one host.
HTTP_DELAY_SECONDS = 0.5
HTTP_TIMEOUT_SECONDS = 30.0

# Tolerated clock skew when rejecting future fetched_at stamps.
_FUTURE_SLACK = timedelta(minutes=5)


@dataclass(frozen=True)
class SourceSpec:
    kind: str  # "file" | "directory" | "http"
    locator: str
    content_type_hint: str | None = None

    def __post_init__(self):
        if self.kind not in _SOURCE_KINDS:
            raise ValueError(f"kind must be one of {_SOURCE_KINDS}, got {self.kind!r}")
        if not self.locator:
            raise ValueError("locator must be non-empty")
        if self.kind == "http" and "://" not in self.locator:
            raise ValueError(f"http locator must carry a URL scheme: {self.locator!r}")
        if self.content_type_hint not in (None, "html", "text"):
            raise ValueError(f"content_type_hint must be 'html' or 'text', got {self.content_type_hint!r}")


@dataclass(frozen=True)
class IngestReport:
    fetched: int
    stored: int
    duplicates_skipped: int
    failures: tuple[tuple[str, str], ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "failures", tuple(self.failures))
        if self.fetched != self.stored + self.duplicates_skipped + len(self.failures):
            raise ValueError("report out of balance: fetched != stored + duplicates + failures")


@dataclass(frozen=True)
class ContentKey:
    digest: str  # 64 lowercase hex chars (sha-256)

    def __post_init__(self):
        if len(self.digest) != 64 or any(c not in "0123456789abcdef" for c in self.digest):
            raise ValueError(f"digest must be 64 lowercase hex chars, got {self.digest!r}")


class DocumentSink(Protocol):
    """Where ingested documents land. Implementations must serialize writes."""

    def contains(self, key: ContentKey) -> bool:
        ...

    def store(self, document: RawDocument, key: ContentKey) -> None:
        ...


class InMemorySink:
    def __init__(self):
        self.documents: dict[str, RawDocument] = {}

    def contains(self, key: ContentKey) -> bool:
        return key.digest in self.documents

    def store(self, document: RawDocument, key: ContentKey) -> None:
        self.documents[key.digest] = document


def sniff_content_type(content: str, hint: str | None = None) -> str:
    """Hint wins; otherwise a leading ``<`` marks HTML."""
    if hint in ("html", "text"):
        return hint
    stripped = content.lstrip()
    return "html" if stripped.startswith("<") else "text"


def dedup_key(raw: RawDocument) -> ContentKey:
    """Deterministic identity: hash(canonical source_url ++ 0x00 ++ content)."""
    canonical_url = raw.source_url.strip()
    digest = hashlib.sha256(
        canonical_url.encode("utf-8") + b"\x00" + raw.content.encode("utf-8")
    ).hexdigest()
    return ContentKey(digest=digest)


class HttpFetcher:
    """Single plain GET per locator with a fixed per-host delay.

    No JavaScript execution, no login flows; ``transport`` is injectable for
    tests.
    """

    def __init__(
        self,
        timeout: float = HTTP_TIMEOUT_SECONDS,
        delay: float = HTTP_DELAY_SECONDS,
        transport: httpx.BaseTransport | None = None,
    ):
        self.timeout = timeout
        self.delay = delay
        self._transport = transport
        self._last_request: dict[str, float] = {}

    def _respect_delay(self, host: str) -> None:
        last = self._last_request.get(host)
        if last is not None:
            wait = self.delay - (time.monotonic() - last)
            if wait > 0:
                time.sleep(wait)
        self._last_request[host] = time.monotonic()

    def fetch(self, url: str, hint: str | None = None) -> RawDocument:
        host = httpx.URL(url).host or ""
        self._respect_delay(host)
        try:
            with httpx.Client(transport=self._transport, timeout=self.timeout, follow_redirects=True) as client:
                response = client.get(url)
        except httpx.TimeoutException as exc:
            raise FetchError("timeout", url, str(exc)) from exc
        except httpx.HTTPError as exc:
            raise FetchError("network", url, str(exc)) from exc
        if response.status_code == 404:
            raise FetchError("not_found", url, "HTTP 404")
        if response.status_code >= 400:
            raise FetchError("network", url, f"HTTP {response.status_code}")
        content = response.text
        if not content:
            raise FetchError("network", url, "empty response body")
        return RawDocument(
            source_url=url,
            fetched_at=datetime.now(timezone.utc),
            content=content,
            content_type=sniff_content_type(content, hint),
        )


def _read_local(path: Path, hint: str | None) -> RawDocument:
    try:
        content = path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise FetchError("not_found", str(path)) from exc
    except OSError as exc:
        raise FetchError("network", str(path), str(exc)) from exc
    if not content:
        raise FetchError("network", str(path), "empty file")
    return RawDocument(
        source_url=f"file://{path.resolve()}",
        fetched_at=datetime.now(timezone.utc),
        content=content,
        content_type=sniff_content_type(content, hint),
    )


def fetch_document(
    source: SourceSpec, locator: str, fetcher: HttpFetcher | None = None
) -> RawDocument:
    """Fetch one document under a source. fetched_at is the fetch time; the
    content type comes from the hint or the leading-``<`` heuristic."""
    if source.kind == "http":
        return (fetcher or HttpFetcher()).fetch(locator, source.content_type_hint)
    return _read_local(Path(locator), source.content_type_hint)


def _iter_corpus_lines(path: Path) -> Iterator[tuple[str, RawDocument | Exception]]:
    """Yield (locator, document-or-error) per non-empty JSONL line."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SourceError(f"cannot read corpus {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        locator = f"{path}:{lineno}"
        try:
            payload = json.loads(line)
            yield locator, RawDocument.from_dict(payload)
        except (ValueError, KeyError, TypeError) as exc:
            yield locator, exc


def _enumerate(source: SourceSpec, fetcher: HttpFetcher | None) -> Iterator[tuple[str, RawDocument | Exception]]:
    if source.kind == "http":
        try:
            yield source.locator, (fetcher or HttpFetcher()).fetch(source.locator, source.content_type_hint)
        except FetchError as exc:
            yield source.locator, exc
        return

    path = Path(source.locator)
    if source.kind == "file":
        if not path.is_file():
            raise SourceError(f"no such file: {path}")
        if path.suffix == ".jsonl":
            yield from _iter_corpus_lines(path)
        else:
            try:
                yield str(path), _read_local(path, source.content_type_hint)
            except FetchError as exc:
                yield str(path), exc
        return

    if not path.is_dir():
        raise SourceError(f"no such directory: {path}")
    for candidate in sorted(path.iterdir()):
        if candidate.is_file() and candidate.suffix in _DOC_SUFFIXES:
            try:
                yield str(candidate), _read_local(candidate, source.content_type_hint)
            except FetchError as exc:
                yield str(candidate), exc


def ingest_source(
    source: SourceSpec, store: DocumentSink, fetcher: HttpFetcher | None = None
) -> IngestReport:
    """Fetch every enumerable document under a source into the sink.

    Duplicates (by content key) are skipped, per-document failures are
    reported rather than raised; only an unenumerable source raises
    SourceError. Idempotent: a second run over the same corpus stores
    nothing and counts everything as duplicates.
    """
    fetched = 0
    stored = 0
    duplicates = 0
    failures: list[tuple[str, str]] = []
    now = datetime.now(timezone.utc)

    for locator, item in _enumerate(source, fetcher):
        fetched += 1
        if isinstance(item, Exception):
            failures.append((locator, str(item)))
            continue
        if item.fetched_at > now + _FUTURE_SLACK:
            failures.append((locator, f"fetched_at in the future: {item.fetched_at.isoformat()}"))
            continue
        key = dedup_key(item)
        if store.contains(key):
            duplicates += 1
            continue
        store.store(item, key)
        stored += 1

    return IngestReport(
        fetched=fetched,
        stored=stored,
        duplicates_skipped=duplicates,
        failures=tuple(failures),
    )
