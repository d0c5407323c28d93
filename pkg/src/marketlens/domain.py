"""Shared vocabulary of the system: postings, skills, embeddings, labels.

All types here are immutable values; they can be shared freely between
concurrent tasks. Serialized forms are owned by the modules that persist
them (ingestion corpus files, datastore tables).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from datetime import date, datetime, timezone

__all__ = [
    "RawDocument",
    "JobRecord",
    "SkillEntry",
    "EmbeddingVector",
    "SkillLabel",
    "ValidationReport",
    "validate_job_record",
    "DEFAULT_LABELS_PER_JOB",
]

# Labels linked per job; global default, overridable through configuration.
DEFAULT_LABELS_PER_JOB = 10

_UNIT_NORM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class RawDocument:
    """One fetched posting, exactly as acquired."""

    source_url: str
    fetched_at: datetime
    content: str
    content_type: str  # "html" | "text"

    def __post_init__(self):
        if not self.source_url:
            raise ValueError("source_url must be non-empty")
        if not self.content:
            raise ValueError("content must be non-empty")
        if self.content_type not in ("html", "text"):
            raise ValueError(f"content_type must be 'html' or 'text', got {self.content_type!r}")
        if self.fetched_at.tzinfo is None:
            raise ValueError("fetched_at must be timezone-aware (UTC)")

    def to_dict(self) -> dict:
        return {
            "source_url": self.source_url,
            "fetched_at": self.fetched_at.astimezone(timezone.utc).isoformat(),
            "content": self.content,
            "content_type": self.content_type,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RawDocument":
        return cls(
            source_url=data["source_url"],
            fetched_at=datetime.fromisoformat(data["fetched_at"]),
            content=data["content"],
            content_type=data["content_type"],
        )


@dataclass(frozen=True)
class JobRecord:
    """One structured job posting."""

    job_id: str
    job_title: str
    company_name: str
    company_information: str
    job_description: str
    job_requirements: str
    source_url: str
    expertise_category: str | None = None
    location: str | None = None
    salary_min: float | None = None
    salary_max: float | None = None
    salary_currency: str | None = None
    posted_date: date | None = None

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        if self.posted_date is not None:
            d["posted_date"] = self.posted_date.isoformat()
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "JobRecord":
        posted = data.get("posted_date")
        if isinstance(posted, str):
            posted = date.fromisoformat(posted)
        return cls(
            job_id=data["job_id"],
            job_title=data["job_title"],
            company_name=data["company_name"],
            company_information=data.get("company_information", ""),
            job_description=data.get("job_description", ""),
            job_requirements=data["job_requirements"],
            source_url=data["source_url"],
            expertise_category=data.get("expertise_category"),
            location=data.get("location"),
            salary_min=data.get("salary_min"),
            salary_max=data.get("salary_max"),
            salary_currency=data.get("salary_currency"),
            posted_date=posted,
        )


@dataclass(frozen=True)
class SkillEntry:
    """Canonical skill with optional aliases."""

    skill_name: str
    aliases: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.skill_name:
            raise ValueError("skill_name must be non-empty")
        object.__setattr__(self, "aliases", tuple(self.aliases))


@dataclass(frozen=True)
class EmbeddingVector:
    """Unit-normalized dense vector. Construction enforces the invariants;
    use :func:`marketlens.enrichment.embed_text` to normalize raw provider
    output into one of these."""

    values: tuple[float, ...]
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.values) != self.dim:
            raise ValueError(f"expected {self.dim} values, got {len(self.values)}")
        if self.dim <= 0:
            raise ValueError("dim must be positive")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("all values must be finite")
        norm = math.sqrt(sum(v * v for v in self.values))
        if abs(norm - 1.0) > _UNIT_NORM_TOLERANCE:
            raise ValueError(f"vector must be unit-normalized, norm={norm!r}")

    @classmethod
    def from_raw(cls, values) -> "EmbeddingVector":
        """Build from an already-normalized sequence."""
        vals = tuple(float(v) for v in values)
        return cls(values=vals, dim=len(vals))


@dataclass(frozen=True)
class SkillLabel:
    """Link between a job and one library skill, ranked by similarity."""

    job_id: str
    skill_name: str
    score: float
    rank: int

    def __post_init__(self):
        if not -1.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [-1, 1], got {self.score!r}")
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank!r}")


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    violations: tuple[tuple[str, str], ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "violations", tuple(self.violations))
        if self.valid != (len(self.violations) == 0):
            raise ValueError("valid flag must match emptiness of violations")


def validate_job_record(record: JobRecord) -> ValidationReport:
    """Check every JobRecord invariant; violations are data, not errors.

    Pure and deterministic: the record is never mutated and the same record
    always yields the same report.
    """
    violations: list[tuple[str, str]] = []
    for name in ("job_title", "company_name", "job_requirements"):
        if not getattr(record, name):
            violations.append((name, "must be non-empty"))
    if record.salary_min is not None and record.salary_max is not None:
        if record.salary_min > record.salary_max:
            violations.append(
                ("salary_min", f"salary_min {record.salary_min} exceeds salary_max {record.salary_max}")
            )
    for name in ("salary_min", "salary_max"):
        value = getattr(record, name)
        if value is not None and not math.isfinite(float(value)):
            violations.append((name, "must be finite"))
    posted = record.posted_date
    if posted is not None and not isinstance(posted, date):
        try:
            date.fromisoformat(str(posted))
        except ValueError:
            violations.append(("posted_date", f"not a valid calendar date: {posted!r}"))
    if not record.source_url:
        violations.append(("source_url", "must be non-empty"))
    if not record.job_id:
        violations.append(("job_id", "must be non-empty"))
    return ValidationReport(valid=not violations, violations=tuple(violations))
