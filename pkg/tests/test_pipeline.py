import json

import pytest

from marketlens.datastore import JobStore
from marketlens.enrichment import load_skill_library
from marketlens.errors import ProviderError
from marketlens.ingestion import SourceSpec
from marketlens.pipeline import relabel_all, run_pipeline
from marketlens.providers import BagOfTokensEmbedder, ScriptedChatProvider
from marketlens.sqlguard import validate_readonly

from corpus_helpers import build_extraction_script, unique_source_urls


@pytest.fixture(scope="module")
def embedder(skills_path_module):
    entries = json.loads(skills_path_module.read_text())
    texts = [", ".join([e["name"], *e["aliases"]]) for e in entries]
    return BagOfTokensEmbedder.from_texts(texts)


@pytest.fixture(scope="module")
def skills_path_module():
    from conftest import DATA_DIR

    return DATA_DIR / "skills_299.json"


@pytest.fixture(scope="module")
def library(skills_path_module, embedder):
    return load_skill_library(skills_path_module, embedder)


def run_over_corpus(corpus_path, library, embedder, malformed=frozenset(), store=None):
    store = store or JobStore(":memory:")
    chat = ScriptedChatProvider(build_extraction_script(corpus_path, malformed))
    source = SourceSpec(kind="file", locator=str(corpus_path))
    report = run_pipeline(store, source, chat, library, embedder, k=10)
    return store, report


class TestPipeline:
    def test_clean_run_counts(self, corpus_path, library, embedder):
        store, report = run_over_corpus(corpus_path, library, embedder)
        assert report.summary() == {
            "fetched": 50,
            "stored": 45,
            "extracted": 45,
            "quarantined": 0,
            "labeled": 45,
        }
        assert store.job_count() == 45
        store.close()

    def test_malformed_docs_quarantined(self, corpus_path, library, embedder):
        urls = unique_source_urls(corpus_path)
        malformed = {urls[7], urls[23]}
        store, report = run_over_corpus(corpus_path, library, embedder, malformed)
        assert report.extracted == 43
        assert report.quarantined == 2
        assert store.job_count() == 43
        quarantined = store.execute_query(
            validate_readonly("SELECT source_url FROM raw_documents WHERE status = 'quarantined'")
        )
        assert {row[0] for row in quarantined.rows} == malformed
        store.close()

    def test_every_job_gets_ten_labels(self, corpus_path, library, embedder):
        store, _report = run_over_corpus(corpus_path, library, embedder)
        table = store.execute_query(
            validate_readonly(
                "SELECT job_id, COUNT(*) AS labels FROM job_skills GROUP BY job_id"
            )
        )
        assert len(table.rows) == 45
        assert all(count == 10 for _job, count in table.rows)
        store.close()

    def test_second_run_is_noop(self, corpus_path, library, embedder):
        store, first = run_over_corpus(corpus_path, library, embedder)
        checksum = store.checksum()
        chat = ScriptedChatProvider([])  # nothing pending, so never called
        report = run_pipeline(
            store, SourceSpec(kind="file", locator=str(corpus_path)), chat, library, embedder
        )
        assert report.ingest.stored == 0
        assert report.ingest.duplicates_skipped == report.ingest.fetched == 50
        assert report.extracted == 0
        assert store.checksum() == checksum
        store.close()

    def test_fresh_rerun_reproduces_checksum(self, corpus_path, library, embedder):
        store_a, _ = run_over_corpus(corpus_path, library, embedder)
        store_b, _ = run_over_corpus(corpus_path, library, embedder)
        assert store_a.checksum() == store_b.checksum()
        store_a.close()
        store_b.close()

    def test_provider_transport_error_propagates(self, corpus_path, library, embedder):
        store = JobStore(":memory:")
        chat = ScriptedChatProvider(["only one response"][:0])  # empty script
        with pytest.raises(ProviderError):
            run_pipeline(
                store, SourceSpec(kind="file", locator=str(corpus_path)), chat, library, embedder
            )
        store.close()


class TestRelabel:
    def test_relabel_with_smaller_library(self, corpus_path, library, embedder, tmp_path):
        store, _ = run_over_corpus(corpus_path, library, embedder)
        small = tmp_path / "small.json"
        small.write_text(json.dumps([{"name": "Python"}, {"name": "SQL"}, {"name": "Docker"}]))
        small_library = load_skill_library(small, embedder)
        count = relabel_all(store, small_library, embedder, k=10)
        assert count == 45
        table = store.execute_query(
            validate_readonly("SELECT COUNT(DISTINCT skill_name) FROM job_skills")
        )
        assert table.rows[0][0] <= 3
        per_job = store.execute_query(
            validate_readonly("SELECT COUNT(*) FROM job_skills GROUP BY job_id")
        )
        assert all(row[0] == 3 for row in per_job.rows)  # min(k, |library|)
        store.close()
