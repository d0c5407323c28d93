"""Structuring raw postings into JobRecords through a chat provider.

The provider is prompted to behave as an HR-specialist parser and must
answer with a single JSON object carrying exactly the structured-job keys.
A malformed or schema-violating answer earns exactly one repair re-prompt
that quotes the error; a second failure quarantines the document.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from datetime import date

from ._json import find_json_object
from .domain import JobRecord, RawDocument, validate_job_record
from .errors import ParseError, SchemaError
from .providers import ChatMessage, ChatProvider, DecodingParams

__all__ = [
    "STRUCTURED_JOB_KEYS",
    "EXTRACTION_SYSTEM_PROMPT",
    "TRUNCATION_MARKER",
    "DEFAULT_CONTENT_BUDGET",
    "PromptEnvelope",
    "ExtractionOutcome",
    "build_extraction_prompt",
    "parse_extraction_response",
    "extract_job",
    "job_id_for_url",
]

# Bit-exact key set of the structured-job JSON schema.
STRUCTURED_JOB_KEYS = (
    "job_title",
    "company_name",
    "company_information",
    "job_description",
    "job_requirements",
    "expertise_category",
    "location",
    "salary_min",
    "salary_max",
    "salary_currency",
    "posted_date",
)

_REQUIRED_STRING_KEYS = (
    "job_title",
    "company_name",
    "company_information",
    "job_description",
    "job_requirements",
)
_OPTIONAL_STRING_KEYS = ("expertise_category", "location", "salary_currency")
_OPTIONAL_NUMBER_KEYS = ("salary_min", "salary_max")

DEFAULT_CONTENT_BUDGET = 20_000
TRUNCATION_MARKER = "\n[content truncated]"

SCHEMA_ID = "structured-job/v1"

# Frozen system prompt, versioned with the repo: extraction replays against
# scripted providers, so the exact wording is part of the test surface.
EXTRACTION_SYSTEM_PROMPT = (
    "You are an expert HR specialist parsing one raw job posting.\n"
    "Extract the posting into a single JSON object with exactly these keys:\n"
    + "\n".join(f"- {key}" for key in STRUCTURED_JOB_KEYS)
    + "\n\nRules:\n"
    "- Output one JSON object and nothing else.\n"
    "- job_title, company_name, company_information, job_description and\n"
    "  job_requirements are strings; use an empty string only when the\n"
    "  posting truly lacks the information.\n"
    "- expertise_category, location and salary_currency are strings or null.\n"
    "- salary_min and salary_max are monthly amounts as numbers, or null.\n"
    "- salary_currency is an ISO-4217 code when salaries are given.\n"
    '- posted_date is a "YYYY-MM-DD" string or null.\n'
    "- Never invent values that are not in the posting."
)

_REPAIR_PROMPT = (
    "The previous reply could not be used: {error}\n"
    "Reply again with exactly one corrected JSON object with exactly these "
    "keys: " + ", ".join(STRUCTURED_JOB_KEYS) + ". No prose, no code fences."
)


@dataclass(frozen=True)
class PromptEnvelope:
    system: str
    user: str
    expected_schema: str = SCHEMA_ID

    def __post_init__(self):
        if not self.user:
            raise ValueError("user payload must be non-empty")
        missing = [key for key in STRUCTURED_JOB_KEYS if key not in self.system]
        if missing:
            raise ValueError(f"system prompt must enumerate all schema keys, missing {missing}")


@dataclass(frozen=True)
class ExtractionOutcome:
    attempts: int
    record: JobRecord | None = None
    failure: tuple[str, str] | None = None  # (stage, message); stage in {parse, schema, validation}

    def __post_init__(self):
        if (self.record is None) == (self.failure is None):
            raise ValueError("exactly one of record/failure must be present")
        if not 1 <= self.attempts <= 2:
            raise ValueError(f"attempts must be 1 or 2, got {self.attempts}")

    @property
    def ok(self) -> bool:
        return self.record is not None


def build_extraction_prompt(
    raw: RawDocument, content_budget: int = DEFAULT_CONTENT_BUDGET
) -> PromptEnvelope:
    """System prompt enumerating the schema plus the (possibly truncated)
    document content as the user payload."""
    content = raw.content
    if len(content) > content_budget:
        content = content[:content_budget] + TRUNCATION_MARKER
    return PromptEnvelope(system=EXTRACTION_SYSTEM_PROMPT, user=content)


def _decode_field(obj: dict, key: str):
    value = obj[key]
    if key in _REQUIRED_STRING_KEYS:
        if not isinstance(value, str):
            raise SchemaError(f"key {key!r} must be a string, got {type(value).__name__}", key=key)
        return value
    if key in _OPTIONAL_STRING_KEYS:
        if value is None:
            return None
        if not isinstance(value, str):
            raise SchemaError(f"key {key!r} must be a string or null", key=key)
        return value or None
    if key in _OPTIONAL_NUMBER_KEYS:
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(f"key {key!r} must be a number or null", key=key)
        return float(value)
    # posted_date
    if value is None:
        return None
    if not isinstance(value, str):
        raise SchemaError("key 'posted_date' must be a 'YYYY-MM-DD' string or null", key=key)
    try:
        return date.fromisoformat(value)
    except ValueError as exc:
        raise SchemaError(f"posted_date {value!r} is not a valid calendar date", key=key) from exc


def job_id_for_url(source_url: str) -> str:
    """Deterministic opaque job identifier derived from the source URL."""
    return hashlib.sha256(("job:" + source_url).encode("utf-8")).hexdigest()[:16]


def parse_extraction_response(
    text: str, source_url: str = "", job_id: str | None = None
) -> JobRecord:
    """Decode the first JSON object in the response against the structured-job
    schema; nulls become absent optionals. Unknown extra keys are ignored.

    ``source_url``/``job_id`` are supplied by the caller: the provider is
    never asked to produce identifiers.
    """
    obj, _ = find_json_object(text)
    missing = [key for key in STRUCTURED_JOB_KEYS if key not in obj]
    if missing:
        raise SchemaError(f"missing required key {missing[0]!r}", key=missing[0])
    decoded = {key: _decode_field(obj, key) for key in STRUCTURED_JOB_KEYS}
    return JobRecord(
        job_id=job_id or job_id_for_url(source_url),
        source_url=source_url,
        job_title=decoded["job_title"],
        company_name=decoded["company_name"],
        company_information=decoded["company_information"],
        job_description=decoded["job_description"],
        job_requirements=decoded["job_requirements"],
        expertise_category=decoded["expertise_category"],
        location=decoded["location"],
        salary_min=decoded["salary_min"],
        salary_max=decoded["salary_max"],
        salary_currency=decoded["salary_currency"],
        posted_date=decoded["posted_date"],
    )


def extract_job(
    raw: RawDocument,
    chat: ChatProvider,
    content_budget: int = DEFAULT_CONTENT_BUDGET,
    params: DecodingParams = DecodingParams(),
) -> ExtractionOutcome:
    """Run the extraction conversation for one document.

    On a parse or schema error the provider gets exactly one repair
    re-prompt quoting the error; a second failure (or a validation failure
    of a decoded record) returns a failure outcome. Provider errors
    propagate; they are transport problems, not extraction results.
    """
    envelope = build_extraction_prompt(raw, content_budget)
    messages = [
        ChatMessage(role="system", content=envelope.system),
        ChatMessage(role="user", content=envelope.user),
    ]

    attempts = 0
    while True:
        attempts += 1
        response = chat.chat(messages, params)
        try:
            record = parse_extraction_response(response, source_url=raw.source_url)
        except (ParseError, SchemaError) as exc:
            stage = "parse" if isinstance(exc, ParseError) else "schema"
            if attempts >= 2:
                return ExtractionOutcome(attempts=attempts, failure=(stage, str(exc)))
            messages.append(ChatMessage(role="assistant", content=response or "(empty)"))
            messages.append(ChatMessage(role="user", content=_REPAIR_PROMPT.format(error=exc)))
            continue
        report = validate_job_record(record)
        if not report.valid:
            detail = "; ".join(f"{field}: {msg}" for field, msg in report.violations)
            return ExtractionOutcome(attempts=attempts, failure=("validation", detail))
        return ExtractionOutcome(attempts=attempts, record=record)
