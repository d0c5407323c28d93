import json
from datetime import datetime, timezone

import httpx
import pytest
from hypothesis import given
from hypothesis import strategies as st

from marketlens.domain import RawDocument
from marketlens.errors import FetchError, SourceError
from marketlens.ingestion import (
    ContentKey,
    HttpFetcher,
    InMemorySink,
    IngestReport,
    SourceSpec,
    dedup_key,
    fetch_document,
    ingest_source,
    sniff_content_type,
)


def make_doc(url="https://x/1", content="hello") -> RawDocument:
    return RawDocument(
        source_url=url,
        fetched_at=datetime(2025, 7, 1, tzinfo=timezone.utc),
        content=content,
        content_type="text",
    )


class TestDedupKey:
    def test_deterministic(self):
        doc = make_doc()
        assert dedup_key(doc) == dedup_key(make_doc())

    def test_url_participates_in_key(self):
        assert dedup_key(make_doc(url="https://a/1")) != dedup_key(make_doc(url="https://b/1"))

    def test_digest_is_64_hex_chars(self):
        digest = dedup_key(make_doc()).digest
        assert len(digest) == 64
        assert all(c in "0123456789abcdef" for c in digest)

    def test_content_key_validates_shape(self):
        with pytest.raises(ValueError):
            ContentKey(digest="abc")


class TestSniffContentType:
    def test_leading_angle_bracket_is_html(self):
        assert sniff_content_type("  <html><body>x</body></html>") == "html"

    def test_plain_text(self):
        assert sniff_content_type("Job: engineer") == "text"

    def test_hint_wins(self):
        assert sniff_content_type("<html>", hint="text") == "text"


class TestFetchDocument:
    def test_file_source_reads_text(self, tmp_path):
        path = tmp_path / "posting.txt"
        path.write_text("A plain text posting", encoding="utf-8")
        doc = fetch_document(SourceSpec(kind="file", locator=str(path)), str(path))
        assert doc.content_type == "text"
        assert doc.content == "A plain text posting"
        assert doc.source_url == f"file://{path.resolve()}"

    def test_html_heuristic_applies_without_hint(self, tmp_path):
        path = tmp_path / "posting.html"
        path.write_text("<html><body>x</body></html>", encoding="utf-8")
        doc = fetch_document(SourceSpec(kind="file", locator=str(path)), str(path))
        assert doc.content_type == "html"

    def test_missing_file_is_not_found(self, tmp_path):
        missing = str(tmp_path / "nope.txt")
        with pytest.raises(FetchError) as err:
            fetch_document(SourceSpec(kind="file", locator=missing), missing)
        assert err.value.kind == "not_found"
        assert missing in str(err.value)

    def test_http_404_is_not_found(self):
        fetcher = HttpFetcher(transport=httpx.MockTransport(lambda r: httpx.Response(404)))
        source = SourceSpec(kind="http", locator="http://portal.test/job/9")
        with pytest.raises(FetchError) as err:
            fetch_document(source, source.locator, fetcher=fetcher)
        assert err.value.kind == "not_found"

    def test_http_timeout_mapped(self):
        def handler(request):
            raise httpx.ReadTimeout("slow")

        fetcher = HttpFetcher(transport=httpx.MockTransport(handler))
        source = SourceSpec(kind="http", locator="http://portal.test/job/9")
        with pytest.raises(FetchError) as err:
            fetch_document(source, source.locator, fetcher=fetcher)
        assert err.value.kind == "timeout"

    def test_http_success_builds_document(self):
        fetcher = HttpFetcher(
            transport=httpx.MockTransport(lambda r: httpx.Response(200, text="<html>ok</html>"))
        )
        source = SourceSpec(kind="http", locator="http://portal.test/job/9")
        doc = fetch_document(source, source.locator, fetcher=fetcher)
        assert doc.content_type == "html"
        assert doc.source_url == "http://portal.test/job/9"


class TestSourceSpec:
    def test_http_locator_requires_scheme(self):
        with pytest.raises(ValueError):
            SourceSpec(kind="http", locator="portal.test/jobs")

    def test_empty_locator_rejected(self):
        with pytest.raises(ValueError):
            SourceSpec(kind="file", locator="")


class TestIngestSource:
    def test_directory_with_duplicates(self, tmp_path):
        for i in range(3):
            (tmp_path / f"doc{i}.txt").write_text(f"posting number {i}")
        # same content, different path -> different file:// url -> distinct key
        (tmp_path / "doc3.txt").write_text("posting number 0")
        sink = InMemorySink()
        report = ingest_source(SourceSpec(kind="directory", locator=str(tmp_path)), sink)
        assert report.fetched == 4
        assert report.stored == 4
        assert report.duplicates_skipped == 0

    def test_jsonl_corpus_with_planted_duplicates(self, tmp_path, corpus_path):
        sink = InMemorySink()
        report = ingest_source(SourceSpec(kind="file", locator=str(corpus_path)), sink)
        assert report.fetched == 50
        assert report.stored == 45
        assert report.duplicates_skipped == 5
        assert report.failures == ()

    def test_idempotent_second_run(self, corpus_path):
        sink = InMemorySink()
        source = SourceSpec(kind="file", locator=str(corpus_path))
        ingest_source(source, sink)
        second = ingest_source(source, sink)
        assert second.stored == 0
        assert second.duplicates_skipped == second.fetched

    def test_empty_directory_all_zero(self, tmp_path):
        report = ingest_source(SourceSpec(kind="directory", locator=str(tmp_path)), InMemorySink())
        assert (report.fetched, report.stored, report.duplicates_skipped) == (0, 0, 0)

    def test_malformed_corpus_line_becomes_failure(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        good = make_doc().to_dict()
        path.write_text(json.dumps(good) + "\n{broken json\n", encoding="utf-8")
        report = ingest_source(SourceSpec(kind="file", locator=str(path)), InMemorySink())
        assert report.fetched == 2
        assert report.stored == 1
        assert len(report.failures) == 1
        assert ":2" in report.failures[0][0]  # locator names the line

    def test_unreadable_file_among_others(self, tmp_path):
        (tmp_path / "a.txt").write_text("fine")
        (tmp_path / "b.txt").write_text("also fine")
        empty = tmp_path / "c.txt"
        empty.write_text("")  # empty file -> fetch failure
        report = ingest_source(SourceSpec(kind="directory", locator=str(tmp_path)), InMemorySink())
        assert report.stored == 2
        assert len(report.failures) == 1

    def test_missing_directory_is_source_error(self, tmp_path):
        with pytest.raises(SourceError):
            ingest_source(
                SourceSpec(kind="directory", locator=str(tmp_path / "missing")), InMemorySink()
            )

    def test_future_fetched_at_rejected(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        doc = make_doc().to_dict()
        doc["fetched_at"] = "2999-01-01T00:00:00+00:00"
        path.write_text(json.dumps(doc) + "\n", encoding="utf-8")
        report = ingest_source(SourceSpec(kind="file", locator=str(path)), InMemorySink())
        assert report.stored == 0
        assert len(report.failures) == 1


class TestReportInvariant:
    def test_unbalanced_report_rejected(self):
        with pytest.raises(ValueError):
            IngestReport(fetched=3, stored=1, duplicates_skipped=1, failures=())

    @given(
        st.lists(
            st.tuples(st.sampled_from(["u1", "u2", "u3", "u4"]), st.sampled_from(["a", "b", "c"])),
            max_size=30,
        )
    )
    def test_balance_holds_over_random_corpora(self, tmp_path_factory, pairs):
        tmp_path = tmp_path_factory.mktemp("corpus")
        path = tmp_path / "corpus.jsonl"
        lines = []
        for url_tag, content_tag in pairs:
            doc = make_doc(url=f"https://x/{url_tag}", content=f"content {content_tag}")
            lines.append(json.dumps(doc.to_dict()))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        report = ingest_source(SourceSpec(kind="file", locator=str(path)), InMemorySink())
        assert report.fetched == report.stored + report.duplicates_skipped + len(report.failures)
        assert report.fetched == len(pairs)
