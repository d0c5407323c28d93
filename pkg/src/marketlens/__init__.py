"""marketlens: job-market intelligence with a tool-augmented analyst agent.

The pieces, bottom to top:

- :mod:`marketlens.domain` - shared value types and validation
- :mod:`marketlens.ingestion` - pluggable sources, dedup, raw documents
- :mod:`marketlens.extraction` - chat-provider structuring into JobRecords
- :mod:`marketlens.enrichment` - skill library, embeddings, top-k labeling
- :mod:`marketlens.sqlguard` / :mod:`marketlens.datastore` - guarded
  read-only SQL, vector search, aggregations, persistence
- :mod:`marketlens.providers` - chat/embedding protocol plus remote and
  deterministic test implementations
- :mod:`marketlens.agent` / :mod:`marketlens.toolbox` - the ReAct loop and
  its six tools
- :mod:`marketlens.pipeline`, :mod:`marketlens.service`,
  :mod:`marketlens.cli` - orchestration and the operational surface
"""

from .domain import (
    DEFAULT_LABELS_PER_JOB,
    EmbeddingVector,
    JobRecord,
    RawDocument,
    SkillEntry,
    SkillLabel,
    ValidationReport,
    validate_job_record,
)
from .enrichment import SkillLibrary, cosine_similarity, embed_text, label_job_skills, load_skill_library
from .errors import MarketLensError

__all__ = [
    "DEFAULT_LABELS_PER_JOB",
    "EmbeddingVector",
    "JobRecord",
    "MarketLensError",
    "RawDocument",
    "SkillEntry",
    "SkillLabel",
    "SkillLibrary",
    "ValidationReport",
    "cosine_similarity",
    "embed_text",
    "label_job_skills",
    "load_skill_library",
    "validate_job_record",
]

__version__ = "0.1.0"
