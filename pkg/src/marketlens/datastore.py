"""SQLite-backed store for companies, jobs, skills, labels, raw documents
and job embeddings, plus the read-only query surface the agent uses.

Table and column names are part of the public contract (agent-generated SQL
targets them):

    companies(company_id, company_name, company_information)
    jobs(job_id, company_id, job_title, job_description, job_requirements,
         expertise_category, location, salary_min, salary_max,
         salary_currency, posted_date, source_url)
    skills(skill_name, aliases)
    job_skills(job_id, skill_name, score, rank)
    raw_documents(content_key, source_url, fetched_at, content_type, status)
    job_embeddings(job_id, dim, vector)

``raw_documents.status`` is one of pending | extracted | quarantined.

One guarded connection serializes all access: multiple threads may call in,
writes are single-writer by construction, and ``checksum`` reads a
consistent snapshot. Read-only execution is double-locked: statements must
come from the guard as :class:`ValidatedQuery`, and the engine runs them
under ``PRAGMA query_only=ON``.
"""

from __future__ import annotations

import hashlib
import json
import sqlite3
import threading
import time
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .domain import EmbeddingVector, JobRecord, RawDocument, SkillEntry, SkillLabel
from .enrichment import labels_are_wellformed
from .errors import (
    DimensionMismatch,
    EmptyIndex,
    InvalidRange,
    QueryError,
    QueryTimeout,
    StorageError,
)
from .ingestion import ContentKey
from .sqlguard import ValidatedQuery

__all__ = [
    "ResultTable",
    "VectorHit",
    "StoreChecksum",
    "JobStore",
    "DEFAULT_MAX_ROWS",
    "DEFAULT_QUERY_TIMEOUT_S",
]

DEFAULT_MAX_ROWS = 500
DEFAULT_QUERY_TIMEOUT_S = 5.0

_SCHEMA = """
CREATE TABLE IF NOT EXISTS companies (
    company_id TEXT PRIMARY KEY,
    company_name TEXT NOT NULL,
    company_information TEXT NOT NULL DEFAULT ''
);
CREATE TABLE IF NOT EXISTS jobs (
    job_id TEXT PRIMARY KEY,
    company_id TEXT NOT NULL REFERENCES companies(company_id),
    job_title TEXT NOT NULL,
    job_description TEXT NOT NULL DEFAULT '',
    job_requirements TEXT NOT NULL,
    expertise_category TEXT,
    location TEXT,
    salary_min REAL,
    salary_max REAL,
    salary_currency TEXT,
    posted_date TEXT,
    source_url TEXT NOT NULL UNIQUE
);
CREATE TABLE IF NOT EXISTS skills (
    skill_name TEXT PRIMARY KEY,
    aliases TEXT NOT NULL DEFAULT '[]'
);
CREATE TABLE IF NOT EXISTS job_skills (
    job_id TEXT NOT NULL REFERENCES jobs(job_id) ON DELETE CASCADE,
    skill_name TEXT NOT NULL,
    score REAL NOT NULL,
    "rank" INTEGER NOT NULL,
    PRIMARY KEY (job_id, skill_name)
);
CREATE TABLE IF NOT EXISTS raw_documents (
    content_key TEXT PRIMARY KEY,
    source_url TEXT NOT NULL,
    fetched_at TEXT NOT NULL,
    content_type TEXT NOT NULL,
    status TEXT NOT NULL DEFAULT 'pending',
    content TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS job_embeddings (
    job_id TEXT PRIMARY KEY REFERENCES jobs(job_id) ON DELETE CASCADE,
    dim INTEGER NOT NULL,
    vector TEXT NOT NULL
);
"""

# Checksum/dump cover exactly these, in this order, rows canonically ordered.
_CHECKSUM_TABLES: tuple[tuple[str, str], ...] = (
    ("companies", "company_id"),
    ("jobs", "job_id"),
    ("skills", "skill_name"),
    ("job_skills", 'job_id, "rank"'),
    ("raw_documents", "content_key"),
    ("job_embeddings", "job_id"),
)

_DATE_COLUMNS = frozenset({"posted_date"})


@dataclass(frozen=True)
class ResultTable:
    columns: tuple[tuple[str, str], ...]  # (name, type tag in {text,integer,real,date,null})
    rows: tuple[tuple, ...]
    row_count: int
    truncated: bool

    def __post_init__(self):
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError("row arity must match column count")
        if self.row_count != len(self.rows):
            raise ValueError("row_count must equal len(rows)")


@dataclass(frozen=True)
class VectorHit:
    job_id: str
    score: float
    job_title: str
    expertise_category: str | None

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "score": self.score,
            "job_title": self.job_title,
            "expertise_category": self.expertise_category,
        }


@dataclass(frozen=True)
class StoreChecksum:
    digest: str

    def __post_init__(self):
        if len(self.digest) != 64:
            raise ValueError("digest must be 64 hex chars")


def _normalize_name(name: str) -> str:
    return " ".join(name.split()).casefold()


def _company_id(company_name: str) -> str:
    return hashlib.sha256(("company:" + _normalize_name(company_name)).encode()).hexdigest()[:16]


def _column_tag(values: Iterable) -> str:
    tag = "null"
    for value in values:
        if value is None:
            continue
        if isinstance(value, str):
            candidate = "date" if _looks_like_date(value) else "text"
        elif isinstance(value, bool) or isinstance(value, int):
            candidate = "integer"
        elif isinstance(value, float):
            candidate = "real"
        else:
            candidate = "text"
        if tag == "null":
            tag = candidate
        elif tag != candidate:
            if {tag, candidate} == {"integer", "real"}:
                tag = "real"
            elif {tag, candidate} <= {"date", "text"}:
                tag = "text"
            else:
                tag = "text"
    return tag


def _looks_like_date(value: str) -> bool:
    if len(value) != 10:
        return False
    try:
        date.fromisoformat(value)
        return True
    except ValueError:
        return False


class JobStore:
    """Single-file persistent store; pass ``":memory:"`` for tests."""

    def __init__(
        self,
        path: str | Path = ":memory:",
        max_rows: int = DEFAULT_MAX_ROWS,
        query_timeout_s: float = DEFAULT_QUERY_TIMEOUT_S,
    ):
        self.path = str(path)
        self.max_rows = max_rows
        self.query_timeout_s = query_timeout_s
        self._lock = threading.RLock()
        try:
            self._conn = sqlite3.connect(self.path, check_same_thread=False)
            self._conn.execute("PRAGMA foreign_keys = ON")
            self._conn.executescript(_SCHEMA)
            self._conn.commit()
        except sqlite3.Error as exc:
            raise StorageError(f"cannot open store at {self.path}: {exc}") from exc
        self._matrix: np.ndarray | None = None  # embedding cache, rebuilt lazily
        self._matrix_ids: list[str] = []

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    # -- document sink -------------------------------------------------

    def contains(self, key: ContentKey) -> bool:
        with self._lock:
            row = self._conn.execute(
                "SELECT 1 FROM raw_documents WHERE content_key = ?", (key.digest,)
            ).fetchone()
        return row is not None

    def store(self, document: RawDocument, key: ContentKey) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO raw_documents (content_key, source_url, fetched_at, content_type, status, content)"
                " VALUES (?, ?, ?, ?, 'pending', ?)",
                (
                    key.digest,
                    document.source_url,
                    document.to_dict()["fetched_at"],
                    document.content_type,
                    document.content,
                ),
            )

    def pending_documents(self) -> list[tuple[ContentKey, RawDocument]]:
        """Raw documents awaiting extraction, in insertion order."""
        with self._lock:
            rows = self._conn.execute(
                "SELECT content_key, source_url, fetched_at, content_type, content"
                " FROM raw_documents WHERE status = 'pending' ORDER BY rowid"
            ).fetchall()
        return [
            (
                ContentKey(digest=row[0]),
                RawDocument.from_dict(
                    {
                        "source_url": row[1],
                        "fetched_at": row[2],
                        "content_type": row[3],
                        "content": row[4],
                    }
                ),
            )
            for row in rows
        ]

    def set_document_status(self, key: ContentKey, status: str) -> None:
        if status not in ("pending", "extracted", "quarantined"):
            raise ValueError(f"invalid status {status!r}")
        with self._lock, self._conn:
            cur = self._conn.execute(
                "UPDATE raw_documents SET status = ? WHERE content_key = ?",
                (status, key.digest),
            )
            if cur.rowcount != 1:
                raise StorageError(f"no raw document with key {key.digest}")

    # -- writes ----------------------------------------------------------

    def register_skills(self, entries: Sequence[SkillEntry]) -> None:
        with self._lock, self._conn:
            self._conn.executemany(
                "INSERT INTO skills (skill_name, aliases) VALUES (?, ?)"
                " ON CONFLICT(skill_name) DO UPDATE SET aliases = excluded.aliases",
                [(e.skill_name, json.dumps(list(e.aliases))) for e in entries],
            )

    def upsert_job(
        self,
        record: JobRecord,
        labels: Sequence[SkillLabel],
        embedding: EmbeddingVector | None = None,
    ) -> str:
        """Insert or replace a job keyed by source_url, atomically.

        The company row is created if absent (keyed by normalized name);
        labels must reference the record and satisfy the rank/score
        invariants.
        """
        for label in labels:
            if label.job_id != record.job_id:
                raise ValueError(f"label {label.skill_name!r} references job {label.job_id!r}, not {record.job_id!r}")
        if not labels_are_wellformed(list(labels)):
            raise ValueError("labels violate rank/score ordering invariants")

        company_id = _company_id(record.company_name)
        posted = record.posted_date.isoformat() if record.posted_date else None
        try:
            with self._lock, self._conn:
                self._conn.execute(
                    "INSERT INTO companies (company_id, company_name, company_information)"
                    " VALUES (?, ?, ?) ON CONFLICT(company_id) DO NOTHING",
                    (company_id, record.company_name, record.company_information),
                )
                prior = self._conn.execute(
                    "SELECT job_id FROM jobs WHERE source_url = ?", (record.source_url,)
                ).fetchone()
                if prior is not None:
                    self._conn.execute("DELETE FROM jobs WHERE job_id = ?", (prior[0],))
                self._conn.execute(
                    "INSERT INTO jobs (job_id, company_id, job_title, job_description,"
                    " job_requirements, expertise_category, location, salary_min,"
                    " salary_max, salary_currency, posted_date, source_url)"
                    " VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)",
                    (
                        record.job_id,
                        company_id,
                        record.job_title,
                        record.job_description,
                        record.job_requirements,
                        record.expertise_category,
                        record.location,
                        record.salary_min,
                        record.salary_max,
                        record.salary_currency,
                        posted,
                        record.source_url,
                    ),
                )
                self._conn.executemany(
                    'INSERT INTO job_skills (job_id, skill_name, score, "rank") VALUES (?, ?, ?, ?)',
                    [(l.job_id, l.skill_name, l.score, l.rank) for l in labels],
                )
                if embedding is not None:
                    self._conn.execute(
                        "INSERT INTO job_embeddings (job_id, dim, vector) VALUES (?, ?, ?)",
                        (record.job_id, embedding.dim, json.dumps(list(embedding.values))),
                    )
                self._matrix = None
        except sqlite3.Error as exc:
            raise StorageError(f"upsert failed for {record.source_url}: {exc}") from exc
        return record.job_id

    def replace_labels(self, job_id: str, labels: Sequence[SkillLabel]) -> None:
        for label in labels:
            if label.job_id != job_id:
                raise ValueError("labels must reference the job being relabeled")
        if not labels_are_wellformed(list(labels)):
            raise ValueError("labels violate rank/score ordering invariants")
        with self._lock, self._conn:
            self._conn.execute("DELETE FROM job_skills WHERE job_id = ?", (job_id,))
            self._conn.executemany(
                'INSERT INTO job_skills (job_id, skill_name, score, "rank") VALUES (?, ?, ?, ?)',
                [(l.job_id, l.skill_name, l.score, l.rank) for l in labels],
            )

    def set_job_embedding(self, job_id: str, embedding: EmbeddingVector) -> None:
        with self._lock, self._conn:
            self._conn.execute(
                "INSERT INTO job_embeddings (job_id, dim, vector) VALUES (?, ?, ?)"
                " ON CONFLICT(job_id) DO UPDATE SET dim = excluded.dim, vector = excluded.vector",
                (job_id, embedding.dim, json.dumps(list(embedding.values))),
            )
            self._matrix = None

    # -- read-only SQL ---------------------------------------------------

    def execute_query(self, query: ValidatedQuery) -> ResultTable:
        """Run a guard-validated statement with row and wall-clock caps."""
        if not isinstance(query, ValidatedQuery):
            raise TypeError("execute_query requires a ValidatedQuery from validate_readonly()")
        deadline = time.monotonic() + self.query_timeout_s

        def _watchdog():
            return 1 if time.monotonic() > deadline else 0

        with self._lock:
            self._conn.set_progress_handler(_watchdog, 10_000)
            self._conn.execute("PRAGMA query_only = ON")
            try:
                cursor = self._conn.execute(query.sql)
                rows = cursor.fetchmany(self.max_rows + 1)
                names = [d[0] for d in cursor.description or []]
            except sqlite3.OperationalError as exc:
                if "interrupted" in str(exc).lower():
                    raise QueryTimeout(
                        f"query exceeded {self.query_timeout_s:.0f}s wall-clock cap"
                    ) from exc
                raise QueryError(str(exc)) from exc
            except sqlite3.Error as exc:
                raise QueryError(str(exc)) from exc
            finally:
                self._conn.set_progress_handler(None, 0)
                self._conn.execute("PRAGMA query_only = OFF")

        truncated = len(rows) > self.max_rows
        if truncated:
            rows = rows[: self.max_rows]
        columns = tuple(
            (name, _column_tag(row[i] for row in rows)) for i, name in enumerate(names)
        )
        return ResultTable(
            columns=columns,
            rows=tuple(tuple(row) for row in rows),
            row_count=len(rows),
            truncated=truncated,
        )

    # -- vector search -----------------------------------------------------

    def _embedding_matrix(self) -> tuple[list[str], np.ndarray]:
        if self._matrix is None:
            rows = self._conn.execute(
                "SELECT job_id, vector FROM job_embeddings ORDER BY job_id"
            ).fetchall()
            self._matrix_ids = [r[0] for r in rows]
            if rows:
                self._matrix = np.asarray([json.loads(r[1]) for r in rows], dtype=np.float64)
            else:
                self._matrix = np.zeros((0, 0), dtype=np.float64)
        return self._matrix_ids, self._matrix

    def vector_search(self, query_vec: EmbeddingVector, k: int) -> list[VectorHit]:
        """Exact exhaustive cosine scoring of all stored job embeddings,
        top-k by (score desc, job_id asc)."""
        if k < 1:
            raise ValueError("k must be >= 1")
        with self._lock:
            ids, matrix = self._embedding_matrix()
            if not ids:
                raise EmptyIndex("no job embeddings stored")
            if matrix.shape[1] != query_vec.dim:
                raise DimensionMismatch(
                    f"query dim {query_vec.dim} vs index dim {matrix.shape[1]}"
                )
            query = np.asarray(query_vec.values, dtype=np.float64)
            # Row-wise dot keeps the arithmetic identical to single-pair
            # cosine scoring, so exhaustive-sort comparisons are exact.
            scores = [min(1.0, max(-1.0, float(np.dot(row, query)))) for row in matrix]
            ranked = sorted(zip(ids, scores), key=lambda p: (-p[1], p[0]))[:k]
            meta = {
                row[0]: (row[1], row[2])
                for row in self._conn.execute(
                    f"SELECT job_id, job_title, expertise_category FROM jobs"
                    f" WHERE job_id IN ({','.join('?' * len(ranked))})",
                    [job_id for job_id, _ in ranked],
                )
            }
        return [
            VectorHit(
                job_id=job_id,
                score=score,
                job_title=meta.get(job_id, ("", None))[0],
                expertise_category=meta.get(job_id, ("", None))[1],
            )
            for job_id, score in ranked
        ]

    # -- canned aggregations --------------------------------------------------

    def top_skills(self, n: int) -> list[tuple[str, int]]:
        """Skills by number of distinct labeled jobs, count desc, name asc."""
        if n < 1:
            raise ValueError("n must be >= 1")
        with self._lock:
            rows = self._conn.execute(
                "SELECT skill_name, COUNT(DISTINCT job_id) AS postings FROM job_skills"
                " GROUP BY skill_name ORDER BY postings DESC, skill_name ASC LIMIT ?",
                (n,),
            ).fetchall()
        return [(name, count) for name, count in rows]

    def top_jobs(self, n: int) -> list[tuple[str, int]]:
        """Titles (trimmed, case-folded) by posting count, count desc, title asc."""
        if n < 1:
            raise ValueError("n must be >= 1")
        with self._lock:
            rows = self._conn.execute("SELECT job_title FROM jobs").fetchall()
        counts: dict[str, int] = {}
        for (title,) in rows:
            normalized = " ".join(title.split()).casefold()
            if normalized:
                counts[normalized] = counts.get(normalized, 0) + 1
        ranked = sorted(counts.items(), key=lambda p: (-p[1], p[0]))
        return ranked[:n]

    def postings_per_day(self, date_from: date, date_to: date) -> list[tuple[date, int]]:
        """One entry per calendar day in [date_from, date_to], zero-filled;
        jobs without posted_date are excluded."""
        if date_from > date_to:
            raise InvalidRange(f"{date_from} is after {date_to}")
        with self._lock:
            rows = self._conn.execute(
                "SELECT posted_date, COUNT(*) FROM jobs"
                " WHERE posted_date IS NOT NULL AND posted_date >= ? AND posted_date <= ?"
                " GROUP BY posted_date",
                (date_from.isoformat(), date_to.isoformat()),
            ).fetchall()
        by_day = {date.fromisoformat(day): count for day, count in rows}
        out: list[tuple[date, int]] = []
        current = date_from
        while current <= date_to:
            out.append((current, by_day.get(current, 0)))
            current += timedelta(days=1)
        return out

    def stats(self) -> dict:
        """Dataset statistics matching the /api/stats contract."""
        with self._lock:
            total = self._conn.execute("SELECT COUNT(*) FROM jobs").fetchone()[0]
            companies = self._conn.execute(
                "SELECT COUNT(DISTINCT company_id) FROM jobs"
            ).fetchone()[0]
            expertise = self._conn.execute(
                "SELECT COUNT(DISTINCT expertise_category) FROM jobs"
                " WHERE expertise_category IS NOT NULL"
            ).fetchone()[0]
            skills_linked = self._conn.execute(
                "SELECT COUNT(DISTINCT skill_name) FROM job_skills"
            ).fetchone()[0]
            date_min, date_max = self._conn.execute(
                "SELECT MIN(posted_date), MAX(posted_date) FROM jobs"
            ).fetchone()
        return {
            "total_postings": total,
            "unique_companies": companies,
            "unique_expertise": expertise,
            "unique_skills_linked": skills_linked,
            "date_min": date_min,
            "date_max": date_max,
        }

    # -- integrity ---------------------------------------------------------

    def _canonical_rows(self, table: str, order_by: str) -> list[list]:
        cursor = self._conn.execute(f"SELECT * FROM {table} ORDER BY {order_by}")
        return [list(row) for row in cursor.fetchall()]

    def checksum(self) -> StoreChecksum:
        """Deterministic digest over a canonical serialization of all rows."""
        hasher = hashlib.sha256()
        with self._lock:
            for table, order_by in _CHECKSUM_TABLES:
                hasher.update(table.encode())
                hasher.update(b"\x1e")
                for row in self._canonical_rows(table, order_by):
                    hasher.update(json.dumps(row, ensure_ascii=False).encode("utf-8"))
                    hasher.update(b"\x1f")
        return StoreChecksum(digest=hasher.hexdigest())

    def dump(self, directory: str | Path) -> dict[str, int]:
        """Emit the full store as one JSONL file per table; returns row counts."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        counts: dict[str, int] = {}
        with self._lock:
            for table, order_by in _CHECKSUM_TABLES:
                cursor = self._conn.execute(f"SELECT * FROM {table} ORDER BY {order_by}")
                names = [d[0] for d in cursor.description]
                path = directory / f"{table}.jsonl"
                with path.open("w", encoding="utf-8") as fh:
                    count = 0
                    for row in cursor.fetchall():
                        fh.write(json.dumps(dict(zip(names, row)), ensure_ascii=False) + "\n")
                        count += 1
                counts[table] = count
        return counts

    def job_count(self) -> int:
        with self._lock:
            return self._conn.execute("SELECT COUNT(*) FROM jobs").fetchone()[0]

    def labels_for_jobs(self, job_ids: Sequence[str]) -> dict[str, list[tuple[str, float, int]]]:
        """skill labels per job id: {job_id: [(skill_name, score, rank), ...]}."""
        if not job_ids:
            return {}
        with self._lock:
            rows = self._conn.execute(
                f'SELECT job_id, skill_name, score, "rank" FROM job_skills'
                f" WHERE job_id IN ({','.join('?' * len(job_ids))})"
                f' ORDER BY job_id, "rank"',
                list(job_ids),
            ).fetchall()
        out: dict[str, list[tuple[str, float, int]]] = {}
        for job_id, skill, score, rank in rows:
            out.setdefault(job_id, []).append((skill, score, rank))
        return out

    def jobs_by_ids(self, job_ids: Sequence[str]) -> dict[str, dict]:
        if not job_ids:
            return {}
        with self._lock:
            cursor = self._conn.execute(
                f"SELECT * FROM jobs WHERE job_id IN ({','.join('?' * len(job_ids))})",
                list(job_ids),
            )
            names = [d[0] for d in cursor.description]
            rows = cursor.fetchall()
        return {row[0]: dict(zip(names, row)) for row in rows}

    def all_jobs(self) -> list[JobRecord]:
        with self._lock:
            cursor = self._conn.execute(
                "SELECT j.job_id, j.job_title, c.company_name, c.company_information,"
                " j.job_description, j.job_requirements, j.expertise_category, j.location,"
                " j.salary_min, j.salary_max, j.salary_currency, j.posted_date, j.source_url"
                " FROM jobs j JOIN companies c ON c.company_id = j.company_id ORDER BY j.rowid"
            )
            rows = cursor.fetchall()
        records = []
        for row in rows:
            records.append(
                JobRecord(
                    job_id=row[0],
                    job_title=row[1],
                    company_name=row[2],
                    company_information=row[3],
                    job_description=row[4],
                    job_requirements=row[5],
                    expertise_category=row[6],
                    location=row[7],
                    salary_min=row[8],
                    salary_max=row[9],
                    salary_currency=row[10],
                    posted_date=date.fromisoformat(row[11]) if row[11] else None,
                    source_url=row[12],
                )
            )
        return records
