"""End-to-end run over one source: ingest, extract, label, upsert.

Documents whose extraction fails twice (or whose record fails validation)
stay in the store with status ``quarantined`` for inspection; nothing is
dropped silently.
"""

from __future__ import annotations

from dataclasses import dataclass

from .datastore import JobStore
from .domain import DEFAULT_LABELS_PER_JOB
from .enrichment import SkillLibrary, embed_text, label_job_skills
from .errors import MarketLensError, ProviderError
from .extraction import extract_job
from .ingestion import HttpFetcher, IngestReport, SourceSpec, ingest_source
from .providers import ChatProvider, EmbeddingProvider

__all__ = ["PipelineReport", "run_pipeline", "relabel_all"]


@dataclass(frozen=True)
class PipelineReport:
    ingest: IngestReport
    extracted: int
    quarantined: int
    labeled: int

    def summary(self) -> dict:
        """Per-stage counts in the wire format of POST /api/ingest."""
        return {
            "fetched": self.ingest.fetched,
            "stored": self.ingest.stored,
            "extracted": self.extracted,
            "quarantined": self.quarantined,
            "labeled": self.labeled,
        }


def run_pipeline(
    store: JobStore,
    source: SourceSpec,
    chat: ChatProvider,
    library: SkillLibrary,
    embedder: EmbeddingProvider,
    k: int = DEFAULT_LABELS_PER_JOB,
    fetcher: HttpFetcher | None = None,
) -> PipelineReport:
    """Ingest a source, then extract/label/upsert every pending document.

    Pending documents are processed in insertion order so scripted providers
    replay deterministically. Provider transport errors propagate; data
    failures quarantine the document and continue.
    """
    ingest_report = ingest_source(source, store, fetcher)
    store.register_skills(library.entries)

    extracted = 0
    quarantined = 0
    labeled = 0
    for key, raw in store.pending_documents():
        try:
            outcome = extract_job(raw, chat)
        except ProviderError:
            raise
        if not outcome.ok:
            store.set_document_status(key, "quarantined")
            quarantined += 1
            continue
        record = outcome.record
        try:
            labels = label_job_skills(record, library, embedder, k=k)
            embedding = embed_text(embedder, record.job_requirements)
            store.upsert_job(record, labels, embedding)
        except MarketLensError:
            store.set_document_status(key, "quarantined")
            quarantined += 1
            continue
        store.set_document_status(key, "extracted")
        extracted += 1
        labeled += 1

    return PipelineReport(
        ingest=ingest_report,
        extracted=extracted,
        quarantined=quarantined,
        labeled=labeled,
    )


def relabel_all(
    store: JobStore,
    library: SkillLibrary,
    embedder: EmbeddingProvider,
    k: int = DEFAULT_LABELS_PER_JOB,
) -> int:
    """Re-label every stored job against a (new) skill library."""
    store.register_skills(library.entries)
    count = 0
    for record in store.all_jobs():
        labels = label_job_skills(record, library, embedder, k=k)
        store.replace_labels(record.job_id, labels)
        store.set_job_embedding(record.job_id, embed_text(embedder, record.job_requirements))
        count += 1
    return count
