"""
Semantic career advice from a qualitative prompt
================================================

"I enjoy creative work and design" is not a keyword query: the advice tool
embeds the sentence, runs an exact vector search over job-requirement
embeddings, aggregates the matched roles (counts and salary medians), and
hands the aggregate to a nested advisor model for the narrative.
"""

import json
from datetime import date

from marketlens.datastore import JobStore
from marketlens.domain import JobRecord
from marketlens.enrichment import embed_text
from marketlens.providers import BagOfTokensEmbedder, ScriptedChatProvider
from marketlens.toolbox import Toolbox

DESIGN = [
    "creative design work: figma, prototyping, user research, visual design",
    "design systems, creative ui concepts, wireframes, usability testing",
    "graphic design, creative direction, branding, typography, layout design",
]
BACKEND = [
    "golang microservices, postgresql, docker, kubernetes, grpc",
    "java spring boot, rest apis, mysql, redis, kafka",
    "rust services, sqlite, profiling, observability, linux",
]

embedder = BagOfTokensEmbedder.from_texts(DESIGN + BACKEND + ["creative work and design"])
store = JobStore(":memory:")

for i, requirements in enumerate(DESIGN + BACKEND):
    is_design = i < len(DESIGN)
    record = JobRecord(
        job_id=f"job{i}",
        job_title="Product Designer" if is_design else "Backend Developer",
        company_name=f"Studio {i}" if is_design else f"Systems {i}",
        company_information="",
        job_description="",
        job_requirements=requirements,
        source_url=f"https://portal/{i}",
        expertise_category="UI/UX Designer" if is_design else "Backend Developer",
        salary_min=900.0 if is_design else 1500.0,
        salary_max=1600.0 if is_design else 2800.0,
        salary_currency="USD",
        posted_date=date(2025, 7, 1 + i),
    )
    store.upsert_job(record, [], embed_text(embedder, requirements))

advisor = ScriptedChatProvider([
    "Your interests point squarely at UI/UX design. Three of the matched "
    "postings are design roles with median salaries of 900-1600 USD; start "
    "with Figma and prototyping practice, then build a user-research portfolio."
])

toolbox = Toolbox(store, embedder=embedder, advisor_chat=advisor)
result = toolbox.tool_get_career_advice({"user_context": "I enjoy creative work and design"})

payload = result.payload
print("matched jobs (score desc):")
for hit in payload.matched_jobs:
    print(f"  {hit.score:+.3f}  {hit.job_title:18s} [{hit.expertise_category}]")

print("\nrecommended roles:")
for role in payload.recommended_roles:
    print(f"  {role['role']:18s} postings={role['posting_count']} "
          f"salary median {role['salary_min_median']}-{role['salary_max_median']}")

print("\nadvice:", payload.advice_text)
store.close()
