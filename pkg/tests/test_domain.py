import math
from datetime import date, datetime, timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from marketlens.domain import (
    EmbeddingVector,
    JobRecord,
    RawDocument,
    SkillEntry,
    SkillLabel,
    ValidationReport,
    validate_job_record,
)


def make_record(**overrides) -> JobRecord:
    base = dict(
        job_id="j1",
        job_title="Backend Developer",
        company_name="Acme",
        company_information="Builds things.",
        job_description="APIs all day.",
        job_requirements="Python, SQL",
        source_url="https://example.com/1",
        salary_min=1000.0,
        salary_max=2000.0,
        salary_currency="USD",
        posted_date=date(2025, 7, 1),
    )
    base.update(overrides)
    return JobRecord(**base)


class TestValidateJobRecord:
    def test_fully_populated_record_is_valid(self):
        report = validate_job_record(make_record())
        assert report.valid
        assert report.violations == ()

    def test_empty_job_title_is_violation(self):
        report = validate_job_record(make_record(job_title=""))
        assert not report.valid
        assert ("job_title", "must be non-empty") in report.violations

    def test_inverted_salary_range_is_violation(self):
        report = validate_job_record(make_record(salary_min=3000.0, salary_max=1000.0))
        assert not report.valid
        assert any(field == "salary_min" for field, _ in report.violations)

    def test_validation_is_pure_and_deterministic(self):
        record = make_record(job_title="", salary_min=5.0, salary_max=1.0)
        first = validate_job_record(record)
        second = validate_job_record(record)
        assert first == second

    def test_unparseable_posted_date_string_is_violation(self):
        record = make_record()
        object.__setattr__(record, "posted_date", "not-a-date")
        report = validate_job_record(record)
        assert any(field == "posted_date" for field, _ in report.violations)


_opt_salary = st.one_of(st.none(), st.floats(min_value=0, max_value=1e7, allow_nan=False))


@given(
    job_title=st.one_of(st.just(""), st.text(min_size=1, max_size=8)),
    company_name=st.one_of(st.just(""), st.text(min_size=1, max_size=8)),
    job_requirements=st.one_of(st.just(""), st.text(min_size=1, max_size=8)),
    salary_min=_opt_salary,
    salary_max=_opt_salary,
)
def test_report_agrees_with_invariants(job_title, company_name, job_requirements, salary_min, salary_max):
    record = make_record(
        job_title=job_title,
        company_name=company_name,
        job_requirements=job_requirements,
        salary_min=salary_min,
        salary_max=salary_max,
    )
    report = validate_job_record(record)
    invariants_hold = (
        bool(job_title)
        and bool(company_name)
        and bool(job_requirements)
        and (salary_min is None or salary_max is None or salary_min <= salary_max)
    )
    assert report.valid == invariants_hold
    assert report.valid == (len(report.violations) == 0)


class TestEmbeddingVector:
    def test_unit_vector_accepted(self):
        vec = EmbeddingVector(values=(1.0, 0.0, 0.0), dim=3)
        assert vec.dim == 3

    def test_dim_mismatch_rejected(self):
        with pytest.raises(ValueError):
            EmbeddingVector(values=(1.0, 0.0), dim=3)

    def test_non_unit_norm_rejected(self):
        with pytest.raises(ValueError):
            EmbeddingVector(values=(1.0, 1.0), dim=2)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            EmbeddingVector(values=(math.inf, 0.0), dim=2)


class TestOtherTypes:
    def test_raw_document_requires_content(self):
        with pytest.raises(ValueError):
            RawDocument(
                source_url="https://x",
                fetched_at=datetime.now(timezone.utc),
                content="",
                content_type="text",
            )

    def test_raw_document_round_trips_through_dict(self):
        doc = RawDocument(
            source_url="https://x",
            fetched_at=datetime(2025, 7, 1, 8, 0, tzinfo=timezone.utc),
            content="<html></html>",
            content_type="html",
        )
        assert RawDocument.from_dict(doc.to_dict()) == doc

    def test_job_record_round_trips_through_dict(self):
        record = make_record()
        assert JobRecord.from_dict(record.to_dict()) == record

    def test_skill_label_score_range_enforced(self):
        with pytest.raises(ValueError):
            SkillLabel(job_id="j", skill_name="X", score=1.5, rank=1)
        with pytest.raises(ValueError):
            SkillLabel(job_id="j", skill_name="X", score=0.5, rank=0)

    def test_skill_entry_aliases_normalized_to_tuple(self):
        entry = SkillEntry(skill_name="AWS", aliases=["Amazon Web Services"])
        assert entry.aliases == ("Amazon Web Services",)

    def test_validation_report_consistency_enforced(self):
        with pytest.raises(ValueError):
            ValidationReport(valid=True, violations=(("x", "bad"),))
