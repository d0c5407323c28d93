"""Semantic enrichment: skill library loading and top-k skill labeling.

Each job's requirements text is embedded and compared against the
pre-computed embedding of every library skill with cosine similarity; the
k best-scoring skills are linked unconditionally (no score threshold),
ties broken by ascending canonical name.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .domain import DEFAULT_LABELS_PER_JOB, EmbeddingVector, JobRecord, SkillEntry, SkillLabel
from .errors import DegenerateEmbedding, DimensionMismatch, LibraryFormatError
from .providers import EmbeddingProvider

__all__ = [
    "SkillLibrary",
    "skill_embedding_text",
    "load_skill_library",
    "cosine_similarity",
    "embed_text",
    "label_job_skills",
]


@dataclass(frozen=True)
class SkillLibrary:
    """Canonical skills plus their pre-computed embeddings. Immutable after
    load; labeling of distinct jobs can share one instance freely."""

    entries: tuple[SkillEntry, ...]
    embeddings: dict[str, EmbeddingVector]

    def __post_init__(self):
        if len(self.embeddings) != len(self.entries):
            raise LibraryFormatError("every entry needs exactly one embedding")
        dims = {vec.dim for vec in self.embeddings.values()}
        if len(dims) > 1:
            raise LibraryFormatError(f"embeddings disagree on dimension: {sorted(dims)}")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def dim(self) -> int:
        return next(iter(self.embeddings.values())).dim


def skill_embedding_text(entry: SkillEntry) -> str:
    """Text embedded for a library skill: canonical name joined with aliases."""
    return ", ".join([entry.skill_name, *entry.aliases])


def load_skill_library(path: str | Path, embedder: EmbeddingProvider) -> SkillLibrary:
    """Load a JSON skill file (array of ``{"name", "aliases"}``) and embed
    every entry.

    Raises LibraryFormatError for malformed JSON, an empty file, duplicate
    names (case-insensitive), or an alias that collides with another entry's
    canonical name.
    """
    raw = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise LibraryFormatError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(data, list) or not data:
        raise LibraryFormatError(f"{path}: expected a non-empty JSON array of skills")

    entries: list[SkillEntry] = []
    seen: dict[str, str] = {}
    for item in data:
        if not isinstance(item, dict) or "name" not in item:
            raise LibraryFormatError(f"{path}: each entry needs a 'name' field, got {item!r}")
        name = item["name"]
        aliases = item.get("aliases", [])
        if not isinstance(name, str) or not name:
            raise LibraryFormatError(f"{path}: skill name must be a non-empty string")
        if not isinstance(aliases, list) or not all(isinstance(a, str) for a in aliases):
            raise LibraryFormatError(f"{path}: aliases of {name!r} must be a list of strings")
        folded = name.casefold()
        if folded in seen:
            raise LibraryFormatError(f"duplicate skill name {name!r} (collides with {seen[folded]!r})")
        seen[folded] = name
        entries.append(SkillEntry(skill_name=name, aliases=tuple(aliases)))

    for entry in entries:
        for alias in entry.aliases:
            owner = seen.get(alias.casefold())
            if owner is not None and owner != entry.skill_name:
                raise LibraryFormatError(
                    f"alias {alias!r} of {entry.skill_name!r} equals canonical name {owner!r}"
                )

    embeddings = {
        entry.skill_name: embed_text(embedder, skill_embedding_text(entry)) for entry in entries
    }
    return SkillLibrary(entries=tuple(entries), embeddings=embeddings)


def _as_array(vec) -> np.ndarray:
    values = getattr(vec, "values", vec)
    return np.asarray(values, dtype=np.float64)


def cosine_similarity(a, b) -> float:
    """dot(a, b) / (|a| * |b|), clamped to [-1, 1] against rounding.

    Accepts EmbeddingVector or any numeric sequence; stored vectors are
    unit-normalized, for which this reduces to the dot product.
    """
    va, vb = _as_array(a), _as_array(b)
    if va.shape != vb.shape:
        raise DimensionMismatch(f"dim {va.shape[0]} vs {vb.shape[0]}")
    norm_a = float(np.linalg.norm(va))
    norm_b = float(np.linalg.norm(vb))
    if norm_a == 0.0 or norm_b == 0.0:
        raise DegenerateEmbedding("cosine similarity undefined for zero vector")
    value = float(np.dot(va, vb) / (norm_a * norm_b))
    return max(-1.0, min(1.0, value))


def embed_text(embedder: EmbeddingProvider, text: str) -> EmbeddingVector:
    """Embed text and re-normalize whatever the provider returns to unit norm."""
    if not text:
        raise ValueError("text must be non-empty")
    raw = np.asarray(embedder.embed(text), dtype=np.float64).reshape(-1)
    norm = float(np.linalg.norm(raw))
    if norm == 0.0:
        raise DegenerateEmbedding(f"provider returned a zero vector for {text[:80]!r}")
    unit = raw / norm
    return EmbeddingVector(values=tuple(float(v) for v in unit), dim=unit.shape[0])


def label_job_skills(
    job: JobRecord,
    library: SkillLibrary,
    embedder: EmbeddingProvider,
    k: int = DEFAULT_LABELS_PER_JOB,
) -> list[SkillLabel]:
    """Top-k most similar library skills for a job's requirements text.

    Returns min(k, |library|) labels sorted by (score desc, skill_name asc)
    with contiguous ranks from 1. No similarity threshold is applied.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not library.entries:
        raise ValueError("library must be non-empty")
    job_vec = embed_text(embedder, job.job_requirements)

    scored: list[tuple[float, str]] = []
    for entry in library.entries:
        skill_vec = library.embeddings[entry.skill_name]
        if skill_vec.dim != job_vec.dim:
            raise DimensionMismatch(f"job dim {job_vec.dim} vs library dim {skill_vec.dim}")
        scored.append((cosine_similarity(job_vec, skill_vec), entry.skill_name))

    scored.sort(key=lambda pair: (-pair[0], pair[1]))
    top = scored[: min(k, len(scored))]
    return [
        SkillLabel(job_id=job.job_id, skill_name=name, score=score, rank=i + 1)
        for i, (score, name) in enumerate(top)
    ]


def labels_are_wellformed(labels: Sequence[SkillLabel]) -> bool:
    """Rank/score invariant check used by tests and the datastore guardrail."""
    if not labels:
        return True
    ranks = [lbl.rank for lbl in labels]
    if ranks != list(range(1, len(labels) + 1)):
        return False
    for earlier, later in zip(labels, labels[1:]):
        if later.score > earlier.score:
            return False
        if later.score == earlier.score and earlier.skill_name > later.skill_name:
            return False
    return True
