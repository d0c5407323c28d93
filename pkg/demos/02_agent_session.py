"""
A replayable ReAct turn with the full trace
===========================================

The agent answers "top 10 skills, show me the numbers" by calling the bar
chart tool, observing its JSON summary, and finalizing. The model is a
scripted provider, so the whole turn is deterministic and the printed
trace is byte-for-byte reproducible.
"""

import json
from datetime import date

from marketlens.agent import AgentSession, run_react, turn_to_dict
from marketlens.datastore import JobStore
from marketlens.domain import JobRecord, SkillLabel
from marketlens.providers import ScriptedChatProvider
from marketlens.toolbox import Toolbox

# Seed a store where link counts follow a simple ladder: each of the six
# skills is linked to a shrinking set of jobs.
LADDER = [
    ("Requirements Analysis", 60), ("Business Analysis", 55), ("English", 50),
    ("SQL", 40), ("Python", 30), ("Docker", 20),
]

store = JobStore(":memory:")
for i in range(LADDER[0][1]):
    record = JobRecord(
        job_id=f"job{i:03d}", job_title="Business Analyst", company_name=f"Co{i % 7}",
        company_information="", job_description="", job_requirements="analysis",
        source_url=f"https://portal/{i}", posted_date=date(2025, 7, 1 + i % 30),
    )
    names = sorted(name for name, count in LADDER if i < count)
    labels = [
        SkillLabel(job_id=record.job_id, skill_name=name, score=1.0 - 0.05 * rank, rank=rank)
        for rank, name in enumerate(names, start=1)
    ]
    store.upsert_job(record, labels)

registry = Toolbox(store).build_registry()

script = ScriptedChatProvider([
    json.dumps({
        "type": "action",
        "thought": "The user wants a ranked list of skills with numbers; the bar chart tool returns both.",
        "tool": "create_top_skills_bar_chart",
        "args": {"n": 10},
    }),
    json.dumps({
        "type": "final",
        "thought": "The chart summary gives me the ranking; I can answer.",
        "answer": "Requirements Analysis leads the market; see the chart for the full top 10.",
    }),
])

turn = run_react(
    AgentSession(session_id="demo"),
    "What are the top 10 most in-demand skills, and can you show me the numbers",
    registry,
    script,
)

print(f"status: {turn.status}\n")
for step in turn.steps:
    print(f"thought     [{step.index}]: {step.thought}")
    print(f"action      [{step.index}]: {step.tool}({json.dumps(dict(step.args))})")
    print(f"observation [{step.index}]: {step.observation}")
    print(f"artifacts   [{step.index}]: {list(step.artifacts)}\n")
print("final answer:", turn.final_answer)

chart = turn.charts[0]
print("\nchart", chart.chart_id, "—", chart.title)
for category, value in zip(chart.categories, chart.series[0].values):
    print(f"  {category:24s} {'█' * int(value // 2)} {value:.0f}")

print("\nturn JSON (the replay/golden format):")
print(json.dumps(turn_to_dict(turn), indent=2)[:600], "…")
store.close()
