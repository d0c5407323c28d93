import json
from datetime import date
from pathlib import Path

import pytest

from marketlens.cli import main
from marketlens.datastore import JobStore
from marketlens.domain import JobRecord, SkillLabel
from marketlens.service import ChartStore
from marketlens.toolbox import ChartSeries, build_chart

from conftest import DATA_DIR
from corpus_helpers import build_extraction_script


def write_config(tmp_path: Path, **extra) -> Path:
    config = {
        "store.path": str(tmp_path / "store.db"),
        "state.dir": str(tmp_path / "state"),
        "skills.path": str(DATA_DIR / "skills_299.json"),
    }
    config.update(extra)
    path = tmp_path / "marketlens.json"
    path.write_text(json.dumps(config))
    return path


def seed_table_three_store(tmp_path: Path):
    """Tiny store whose top-3 skills mirror the headline counts scaled down."""
    store = JobStore(tmp_path / "store.db")
    names = [("Requirements Analysis", 5), ("Business Analysis", 4), ("English", 3)]
    serial = 0
    for skill, count in names:
        for _ in range(count):
            record = JobRecord(
                job_id=f"job{serial:04d}",
                job_title="Business Analyst",
                company_name="Acme",
                company_information="",
                job_description="",
                job_requirements="analysis",
                source_url=f"https://portal/{serial}",
                posted_date=date(2025, 7, 1),
            )
            store.upsert_job(
                record,
                [SkillLabel(job_id=record.job_id, skill_name=skill, score=0.9, rank=1)],
            )
            serial += 1
    store.close()


class TestTopSkillsCommand:
    def test_prints_name_count_lines(self, tmp_path, capsys):
        config = write_config(tmp_path)
        seed_table_three_store(tmp_path)
        code = main(["--config", str(config), "top-skills", "-n", "3"])
        out = capsys.readouterr().out.splitlines()
        assert code == 0
        assert out == ["Requirements Analysis 5", "Business Analysis 4", "English 3"]

    def test_nonpositive_n_is_user_error(self, tmp_path, capsys):
        config = write_config(tmp_path)
        assert main(["--config", str(config), "top-skills", "-n", "0"]) == 1

    def test_unknown_flag_prints_usage_exit_1(self, tmp_path, capsys):
        config = write_config(tmp_path)
        code = main(["--config", str(config), "top-skills", "--bogus"])
        err = capsys.readouterr().err
        assert code == 1
        assert "Usage" in err or "usage" in err


class TestIngestCommand:
    def test_full_pipeline_over_bundled_corpus(self, tmp_path, capsys):
        corpus = DATA_DIR / "corpus_50.jsonl"
        script_path = tmp_path / "script.json"
        script_path.write_text(json.dumps(build_extraction_script(corpus)))
        config = write_config(
            tmp_path,
            **{"provider.kind": "scripted", "provider.script_path": str(script_path)},
        )
        code = main(["--config", str(config), "ingest", "--source", str(corpus)])
        out = capsys.readouterr().out
        assert code == 0
        assert "fetched: 50" in out
        assert "stored: 45" in out
        assert "extracted: 45" in out
        assert "quarantined: 0" in out
        assert "duplicates_skipped: 5" in out

    def test_missing_source_directory_is_user_error(self, tmp_path, capsys):
        config = write_config(
            tmp_path,
            **{"provider.kind": "scripted", "provider.script_path": str(tmp_path / "s.json")},
        )
        (tmp_path / "s.json").write_text("[]")
        code = main(["--config", str(config), "ingest", "--source", str(tmp_path / "nope.jsonl")])
        assert code == 1


class TestAskCommand:
    def test_scripted_answer_printed(self, tmp_path, capsys):
        seed_table_three_store(tmp_path)
        script_path = tmp_path / "script.json"
        script_path.write_text(
            json.dumps(
                [
                    json.dumps({"type": "action", "thought": "count", "tool": "get_top_skills", "args": {"n": 3}}),
                    json.dumps({"type": "final", "thought": "done", "answer": "Requirements Analysis leads."}),
                ]
            )
        )
        config = write_config(
            tmp_path,
            **{"provider.kind": "scripted", "provider.script_path": str(script_path)},
        )
        code = main(["--config", str(config), "ask", "top skills?", "--trace"])
        out = capsys.readouterr().out
        assert code == 0
        assert "Requirements Analysis leads." in out
        assert "observation" in out  # --trace prints the loop

    def test_unreachable_provider_exit_2_names_provider(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("MARKETLENS_LLM_API_KEY", "sk-test")
        seed_table_three_store(tmp_path)
        config = write_config(
            tmp_path,
            **{
                "provider.kind": "remote",
                "provider.chat_endpoint": "http://127.0.0.1:1/chat",
                "provider.embed_endpoint": "http://127.0.0.1:1/embed",
                "provider.timeout_ms": 500,
            },
        )
        code = main(["--config", str(config), "ask", "anything"])
        err = capsys.readouterr().err
        assert code == 2
        assert "provider" in err.lower()


class TestExportChartCommand:
    def test_exported_file_is_valid_chart_spec(self, tmp_path, capsys):
        config = write_config(tmp_path)
        chart = build_chart(
            "bar", "Top Skills", "skill", "postings", ["Python"],
            [ChartSeries("postings", (10.0,))],
            {"tool": "create_top_skills_bar_chart", "params": {"n": 1}},
        )
        ChartStore(tmp_path / "state").save(chart)
        out_file = tmp_path / "spec.json"
        code = main(["--config", str(config), "export-chart", chart.chart_id, "-o", str(out_file)])
        assert code == 0
        from marketlens.toolbox import ChartSpec

        decoded = ChartSpec.from_dict(json.loads(out_file.read_text()))
        assert decoded == chart

    def test_unknown_chart_id_is_user_error(self, tmp_path):
        config = write_config(tmp_path)
        assert main(["--config", str(config), "export-chart", "cnope", "-o", str(tmp_path / "x.json")]) == 1


class TestEnrichCommand:
    def test_relabels_all_jobs(self, tmp_path, capsys):
        corpus = DATA_DIR / "corpus_50.jsonl"
        script_path = tmp_path / "script.json"
        script_path.write_text(json.dumps(build_extraction_script(corpus)))
        config = write_config(
            tmp_path,
            **{"provider.kind": "scripted", "provider.script_path": str(script_path)},
        )
        assert main(["--config", str(config), "ingest", "--source", str(corpus)]) == 0
        capsys.readouterr()
        code = main(["--config", str(config), "enrich", "--skills", str(DATA_DIR / "skills_299.json")])
        out = capsys.readouterr().out
        assert code == 0
        assert "relabeled: 45" in out


class TestConfig:
    def test_unknown_config_key_is_user_error(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"no.such.key": 1}))
        assert main(["--config", str(path), "top-skills", "-n", "1"]) == 1

    def test_malformed_config_is_user_error(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{truncated")
        assert main(["--config", str(path), "top-skills", "-n", "1"]) == 1
