"""
End-to-end pipeline on a tiny inline corpus
===========================================

Ingest raw postings, structure them with a (scripted) chat provider, label
skills by embedding similarity, and land everything in the store. Runs
fully offline: the extractor is a scripted provider and the embedder is
the deterministic bag-of-tokens model.
"""

import json
import tempfile
from pathlib import Path

from marketlens.datastore import JobStore
from marketlens.enrichment import load_skill_library
from marketlens.ingestion import SourceSpec
from marketlens.pipeline import run_pipeline
from marketlens.providers import BagOfTokensEmbedder, ScriptedChatProvider
from marketlens.sqlguard import validate_readonly

workdir = Path(tempfile.mkdtemp(prefix="marketlens-demo-"))

# A corpus of four postings, one of them posted twice on the same URL.
postings = [
    ("https://portal.vn/job/1", "Backend Developer", "Lotus Fintech",
     "Java, Spring Boot, PostgreSQL, Docker", "2025-07-03"),
    ("https://portal.vn/job/2", "Data Engineer", "Mekong Analytics",
     "Python, Apache Spark, SQL, Data Warehousing", "2025-07-10"),
    ("https://portal.vn/job/3", "UI/UX Designer", "Pearl River Studio",
     "Figma, Prototyping, User Research, UI Design", "2025-07-15"),
    ("https://portal.vn/job/4", "Business Analyst", "Lotus Fintech",
     "Requirements Analysis, Business Analysis, English, SQL", "2025-08-01"),
]

corpus = workdir / "corpus.jsonl"
with corpus.open("w") as fh:
    for url, title, company, skills, posted in postings + [postings[0]]:  # planted duplicate
        fh.write(json.dumps({
            "source_url": url,
            "fetched_at": "2025-08-08T09:00:00+00:00",
            "content": f"{title} at {company}. Requirements: {skills}. Posted {posted}.",
            "content_type": "text",
        }) + "\n")

# The scripted extractor answers with one JSON object per unique document.
responses = [
    json.dumps({
        "job_title": title, "company_name": company,
        "company_information": f"{company} is hiring.", "job_description": "",
        "job_requirements": skills, "expertise_category": title,
        "location": "Ho Chi Minh City", "salary_min": 1200, "salary_max": 2400,
        "salary_currency": "USD", "posted_date": posted,
    })
    for url, title, company, skills, posted in postings
]

skills_file = workdir / "skills.json"
skills_file.write_text(json.dumps([
    {"name": "Python", "aliases": []},
    {"name": "Java", "aliases": []},
    {"name": "SQL", "aliases": []},
    {"name": "Docker", "aliases": []},
    {"name": "Figma", "aliases": []},
    {"name": "Prototyping", "aliases": []},
    {"name": "User Research", "aliases": []},
    {"name": "UI Design", "aliases": []},
    {"name": "Requirements Analysis", "aliases": []},
    {"name": "Business Analysis", "aliases": []},
    {"name": "English", "aliases": []},
    {"name": "Apache Spark", "aliases": []},
    {"name": "Data Warehousing", "aliases": []},
    {"name": "Spring Boot", "aliases": []},
    {"name": "PostgreSQL", "aliases": ["Postgres"]},
]))

embedder = BagOfTokensEmbedder.from_texts(
    [", ".join([e["name"], *e["aliases"]]) for e in json.loads(skills_file.read_text())]
)
library = load_skill_library(skills_file, embedder)
store = JobStore(workdir / "store.db")

report = run_pipeline(
    store,
    SourceSpec(kind="file", locator=str(corpus)),
    ScriptedChatProvider(responses),
    library,
    embedder,
    k=5,
)

print("pipeline:", report.summary())
print("duplicates skipped:", report.ingest.duplicates_skipped)
print("store checksum:", store.checksum().digest[:16], "…")

table = store.execute_query(validate_readonly(
    "SELECT j.job_title, s.skill_name, s.\"rank\" FROM jobs j"
    " JOIN job_skills s ON s.job_id = j.job_id WHERE s.\"rank\" <= 2"
    " ORDER BY j.job_title, s.\"rank\""
))
print("\ntop-2 labels per job:")
for title, skill, rank in table.rows:
    print(f"  {title:18s} #{rank} {skill}")

print("\nstats:", store.stats())
store.close()
