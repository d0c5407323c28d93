"""The agent's six tools over the datastore, embedder and chart builder.

Handlers never raise into the loop and never write to the store: every
failure (guard rejection, bad argument, empty data) becomes an ``error:``
observation the model can react to. Chart data travels as ChartSpec
artifacts referenced by id; the model sees only a JSON summary.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import date
from statistics import median

from .agent import ToolDescriptor, ToolRegistry, ToolResult
from .datastore import JobStore, VectorHit
from .enrichment import embed_text
from .errors import (
    DegenerateEmbedding,
    EmptyIndex,
    GuardError,
    MarketLensError,
    ProviderError,
    QueryError,
    QueryTimeout,
)
from .providers import ChatMessage, ChatProvider, DecodingParams, EmbeddingProvider
from .sqlguard import validate_readonly

__all__ = ["ChartSpec", "ChartSeries", "AdvicePayload", "Toolbox", "CAREER_ADVICE_K"]

CAREER_ADVICE_K = 20
_RENDER_ROW_CAP = 50
_TREND_MAX_SPAN_DAYS = 366


@dataclass(frozen=True)
class ChartSeries:
    name: str
    values: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"name": self.name, "values": list(self.values)}


@dataclass(frozen=True)
class ChartSpec:
    """Renderer-agnostic bar/line chart with provenance of the producing tool."""

    chart_id: str
    kind: str  # "bar" | "line"
    title: str
    x_label: str
    y_label: str
    categories: tuple[str, ...]
    series: tuple[ChartSeries, ...]
    provenance: dict

    def __post_init__(self):
        if self.kind not in ("bar", "line"):
            raise ValueError(f"kind must be 'bar' or 'line', got {self.kind!r}")
        if not self.categories:
            raise ValueError("categories must be non-empty")
        if self.kind == "bar" and len(self.series) != 1:
            raise ValueError("bar charts carry exactly one series")
        for s in self.series:
            if len(s.values) != len(self.categories):
                raise ValueError(f"series {s.name!r} length != categories length")

    def to_dict(self) -> dict:
        return {
            "chart_id": self.chart_id,
            "kind": self.kind,
            "title": self.title,
            "x_label": self.x_label,
            "y_label": self.y_label,
            "categories": list(self.categories),
            "series": [s.to_dict() for s in self.series],
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChartSpec":
        return cls(
            chart_id=data["chart_id"],
            kind=data["kind"],
            title=data["title"],
            x_label=data["x_label"],
            y_label=data["y_label"],
            categories=tuple(data["categories"]),
            series=tuple(
                ChartSeries(name=s["name"], values=tuple(s["values"])) for s in data["series"]
            ),
            provenance=data["provenance"],
        )


def _chart_id(content: dict) -> str:
    canonical = json.dumps(content, sort_keys=True, ensure_ascii=False)
    return "c" + hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def build_chart(
    kind: str,
    title: str,
    x_label: str,
    y_label: str,
    categories: list[str],
    series: list[ChartSeries],
    provenance: dict,
) -> ChartSpec:
    """Assemble a spec with a deterministic content-derived id."""
    content = {
        "kind": kind,
        "title": title,
        "x_label": x_label,
        "y_label": y_label,
        "categories": categories,
        "series": [s.to_dict() for s in series],
        "provenance": provenance,
    }
    return ChartSpec(
        chart_id=_chart_id(content),
        kind=kind,
        title=title,
        x_label=x_label,
        y_label=y_label,
        categories=tuple(categories),
        series=tuple(series),
        provenance=provenance,
    )


@dataclass(frozen=True)
class AdvicePayload:
    """Aggregate behind a career-advice answer, ready for synthesis."""

    matched_jobs: tuple[VectorHit, ...]
    recommended_roles: tuple[dict, ...]  # {role, posting_count, salary_min_median, salary_max_median}
    suggested_skills: tuple[tuple[str, int], ...]  # (skill_name, frequency) desc
    advice_text: str = ""

    def to_dict(self, include_advice: bool = True) -> dict:
        out = {
            "matched_jobs": [hit.to_dict() for hit in self.matched_jobs],
            "recommended_roles": list(self.recommended_roles),
            "suggested_skills": [
                {"skill_name": name, "frequency": freq} for name, freq in self.suggested_skills
            ],
        }
        if include_advice:
            out["advice_text"] = self.advice_text
        return out


_ADVISOR_SYSTEM_PROMPT = (
    "You are a career advisor. You receive a JSON aggregate of job-market "
    "matches for one person. Write a short, personalized recommendation that "
    "names roles and skills to develop. Use only numbers present in the "
    "aggregate; never invent data."
)

_TOP_SKILLS_SQL = (
    "SELECT skill_name, COUNT(DISTINCT job_id) AS postings FROM job_skills "
    "GROUP BY skill_name ORDER BY postings DESC, skill_name ASC LIMIT {n}"
)


def _fmt_cell(value) -> str:
    if value is None:
        return "NULL"
    if isinstance(value, float):
        return f"{value:g}"
    return str(value)


class Toolbox:
    """Stateless handlers over immutable dependencies; one instance can
    serve concurrent sessions."""

    def __init__(
        self,
        store: JobStore,
        embedder: EmbeddingProvider | None = None,
        advisor_chat: ChatProvider | None = None,
        advice_k: int = CAREER_ADVICE_K,
        params: DecodingParams = DecodingParams(),
    ):
        self.store = store
        self.embedder = embedder
        self.advisor_chat = advisor_chat
        self.advice_k = advice_k
        self.params = params

    # -- handlers -------------------------------------------------------

    def tool_query_database(self, args: dict) -> ToolResult:
        sql = args.get("sql", "")
        if not isinstance(sql, str):
            return ToolResult(observation="error: sql must be a string")
        try:
            validated = validate_readonly(sql)
        except GuardError as exc:
            if exc.kind == "empty":
                return ToolResult(observation="error: empty query")
            if exc.kind == "write_statement":
                return ToolResult(observation=f"error: write statement rejected: {exc}")
            return ToolResult(observation=f"error: {exc}")
        try:
            table = self.store.execute_query(validated)
        except (QueryError, QueryTimeout) as exc:
            return ToolResult(observation=f"error: {exc}")

        header = " | ".join(name for name, _tag in table.columns)
        lines = [header]
        for row in table.rows[:_RENDER_ROW_CAP]:
            lines.append(" | ".join(_fmt_cell(v) for v in row))
        shown = min(table.row_count, _RENDER_ROW_CAP)
        note = f"({table.row_count} rows"
        if table.row_count > shown:
            note += f", showing first {shown}"
        if table.truncated:
            note += f", result capped at {self.store.max_rows}"
        note += ")"
        lines.append(note)
        return ToolResult(observation="\n".join(lines))

    def tool_get_top_skills(self, args: dict) -> ToolResult:
        n = args.get("n", 10)
        if not isinstance(n, int) or isinstance(n, bool) or not 1 <= n <= 100:
            return ToolResult(observation="error: n out of range (1..100)")
        ranked = self.store.top_skills(n)
        if not ranked:
            return ToolResult(observation="no skills labeled yet")
        lines = [f"{i}. {name} — {count}" for i, (name, count) in enumerate(ranked, start=1)]
        return ToolResult(observation="\n".join(lines))

    def tool_get_top_jobs(self, args: dict) -> ToolResult:
        n = args.get("n", 10)
        if not isinstance(n, int) or isinstance(n, bool) or not 1 <= n <= 100:
            return ToolResult(observation="error: n out of range (1..100)")
        ranked = self.store.top_jobs(n)
        if not ranked:
            return ToolResult(observation="no jobs stored yet")
        lines = [f"{i}. {title} — {count}" for i, (title, count) in enumerate(ranked, start=1)]
        return ToolResult(observation="\n".join(lines))

    def tool_create_top_skills_bar_chart(self, args: dict) -> ToolResult:
        n = args.get("n", 10)
        if not isinstance(n, int) or isinstance(n, bool) or not 1 <= n <= 50:
            return ToolResult(observation="error: n out of range (1..50)")
        ranked = self.store.top_skills(n)
        if not ranked:
            return ToolResult(observation="error: no data to chart")
        categories = [name for name, _ in ranked]
        values = [float(count) for _, count in ranked]
        chart = build_chart(
            kind="bar",
            title=f"Top {len(categories)} In-Demand Skills",
            x_label="skill",
            y_label="postings",
            categories=categories,
            series=[ChartSeries(name="postings", values=tuple(values))],
            provenance={
                "tool": "create_top_skills_bar_chart",
                "params": {"n": n},
                "sql": _TOP_SKILLS_SQL.format(n=n),
            },
        )
        summary = {
            "chart_id": chart.chart_id,
            "top_category": categories[0],
            "top_value": values[0],
            "n": n,
        }
        return ToolResult(observation=json.dumps(summary), charts=(chart,))

    def tool_create_trend_line_chart(self, args: dict) -> ToolResult:
        try:
            date_from = date.fromisoformat(str(args.get("from", "")))
            date_to = date.fromisoformat(str(args.get("to", "")))
        except ValueError:
            return ToolResult(observation="error: 'from'/'to' must be YYYY-MM-DD dates")
        if date_from > date_to:
            return ToolResult(observation="error: invalid range: 'from' is after 'to'")
        if (date_to - date_from).days > _TREND_MAX_SPAN_DAYS:
            return ToolResult(
                observation=f"error: range too large (max {_TREND_MAX_SPAN_DAYS} days)"
            )
        per_day = self.store.postings_per_day(date_from, date_to)
        categories = [day.isoformat() for day, _ in per_day]
        values = [float(count) for _, count in per_day]
        chart = build_chart(
            kind="line",
            title=f"Job postings per day, {date_from.isoformat()} to {date_to.isoformat()}",
            x_label="date",
            y_label="postings",
            categories=categories,
            series=[ChartSeries(name="postings per day", values=tuple(values))],
            provenance={
                "tool": "create_trend_line_chart",
                "params": {"from": date_from.isoformat(), "to": date_to.isoformat()},
            },
        )
        summary = {
            "chart_id": chart.chart_id,
            "days": len(categories),
            "total_postings": sum(values),
            "peak_day": categories[values.index(max(values))] if values else None,
        }
        return ToolResult(observation=json.dumps(summary), charts=(chart,))

    def tool_get_career_advice(self, args: dict) -> ToolResult:
        user_context = args.get("user_context", "")
        if not isinstance(user_context, str) or not user_context.strip():
            return ToolResult(observation="error: user_context must be non-empty")
        if self.embedder is None:
            return ToolResult(observation="error: no embedding provider configured")
        try:
            query_vec = embed_text(self.embedder, user_context)
            matched = self.store.vector_search(query_vec, k=self.advice_k)
        except EmptyIndex:
            return ToolResult(observation="error: no job embeddings indexed yet")
        except (DegenerateEmbedding, MarketLensError) as exc:
            return ToolResult(observation=f"error: {exc}")

        payload = self._aggregate_advice(matched)
        aggregate = payload.to_dict(include_advice=False)

        advice_text = ""
        warning = ""
        if self.advisor_chat is not None:
            try:
                advice_text = self.advisor_chat.chat(
                    [
                        ChatMessage("system", _ADVISOR_SYSTEM_PROMPT),
                        ChatMessage(
                            "user",
                            f"User context: {user_context}\n\nAggregate:\n{json.dumps(aggregate)}",
                        ),
                    ],
                    self.params,
                )
            except ProviderError as exc:
                warning = f"warning: advisor unavailable ({exc.kind}); returning data only"
        else:
            warning = "warning: no advisor model configured; returning data only"

        payload = AdvicePayload(
            matched_jobs=payload.matched_jobs,
            recommended_roles=payload.recommended_roles,
            suggested_skills=payload.suggested_skills,
            advice_text=advice_text,
        )
        observation = json.dumps(aggregate)
        observation += "\n" + (f"advice: {advice_text}" if advice_text else warning)
        return ToolResult(observation=observation, payload=payload)

    def _aggregate_advice(self, matched: list[VectorHit]) -> AdvicePayload:
        job_ids = [hit.job_id for hit in matched]
        jobs = self.store.jobs_by_ids(job_ids)

        groups: dict[str, dict] = {}
        for hit in matched:
            job = jobs.get(hit.job_id, {})
            role = hit.expertise_category or " ".join(hit.job_title.split()).casefold() or "(unknown)"
            group = groups.setdefault(
                role, {"count": 0, "best_score": -2.0, "salary_min": [], "salary_max": []}
            )
            group["count"] += 1
            group["best_score"] = max(group["best_score"], hit.score)
            if job.get("salary_min") is not None:
                group["salary_min"].append(float(job["salary_min"]))
            if job.get("salary_max") is not None:
                group["salary_max"].append(float(job["salary_max"]))

        # Equal posting counts are ordered by best match score, then name, so
        # the most relevant role leads.
        ranked_roles = sorted(
            groups.items(), key=lambda kv: (-kv[1]["count"], -kv[1]["best_score"], kv[0])
        )
        recommended = tuple(
            {
                "role": role,
                "posting_count": info["count"],
                "salary_min_median": median(info["salary_min"]) if info["salary_min"] else None,
                "salary_max_median": median(info["salary_max"]) if info["salary_max"] else None,
            }
            for role, info in ranked_roles
        )

        labels = self.store.labels_for_jobs(job_ids)
        frequency: dict[str, int] = {}
        for per_job in labels.values():
            for skill_name, _score, _rank in per_job:
                frequency[skill_name] = frequency.get(skill_name, 0) + 1
        suggested = tuple(sorted(frequency.items(), key=lambda kv: (-kv[1], kv[0])))

        return AdvicePayload(
            matched_jobs=tuple(matched),
            recommended_roles=recommended,
            suggested_skills=suggested,
        )

    # -- registry ---------------------------------------------------------

    def build_registry(self) -> ToolRegistry:
        registry = ToolRegistry()
        registry.register(
            ToolDescriptor(
                name="query_database",
                description=(
                    "Run one read-only SQL SELECT against the job market database. Tables: "
                    "companies(company_id, company_name, company_information), "
                    "jobs(job_id, company_id, job_title, job_description, job_requirements, "
                    "expertise_category, location, salary_min, salary_max, salary_currency, "
                    "posted_date, source_url), skills(skill_name, aliases), "
                    "job_skills(job_id, skill_name, score, rank)."
                ),
                arg_schema=(("sql", "string", True),),
            ),
            self.tool_query_database,
        )
        registry.register(
            ToolDescriptor(
                name="get_top_skills",
                description="Most in-demand skills by number of postings linked to each skill.",
                arg_schema=(("n", "integer", False),),
            ),
            self.tool_get_top_skills,
        )
        registry.register(
            ToolDescriptor(
                name="get_top_jobs",
                description="Most frequent job titles by posting count.",
                arg_schema=(("n", "integer", False),),
            ),
            self.tool_get_top_jobs,
        )
        registry.register(
            ToolDescriptor(
                name="create_top_skills_bar_chart",
                description="Bar chart of the top n in-demand skills; returns a chart id and summary.",
                arg_schema=(("n", "integer", False),),
            ),
            self.tool_create_top_skills_bar_chart,
        )
        registry.register(
            ToolDescriptor(
                name="create_trend_line_chart",
                description="Line chart of postings per day between two YYYY-MM-DD dates.",
                arg_schema=(("from", "string", True), ("to", "string", True)),
            ),
            self.tool_create_trend_line_chart,
        )
        registry.register(
            ToolDescriptor(
                name="get_career_advice",
                description=(
                    "Personalized career advice: semantic search of the job database with the "
                    "user's own words, aggregated roles, salaries and skills to develop."
                ),
                arg_schema=(("user_context", "string", True),),
            ),
            self.tool_get_career_advice,
        )
        return registry
