"""Command-line surface: pipeline runs, one-shot questions, serving.

Exit codes: 0 success, 1 user error (bad arguments, bad input files),
2 internal error (provider or storage failure).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .agent import AgentSession, run_react, turn_to_dict
from .config import AppConfig, load_config
from .datastore import JobStore
from .enrichment import SkillLibrary, load_skill_library, skill_embedding_text
from .errors import (
    ConfigError,
    FetchError,
    LibraryFormatError,
    MarketLensError,
    ProviderError,
    SourceError,
    StorageError,
)
from .ingestion import SourceSpec
from .pipeline import relabel_all, run_pipeline
from .providers import (
    BagOfTokensEmbedder,
    RemoteChatProvider,
    RemoteEmbeddingProvider,
    ScriptedChatProvider,
    build_vocabulary,
)
from .service import ChartStore, SessionStore, create_app
from .toolbox import Toolbox

USER_ERROR_TYPES = (
    ConfigError,
    SourceError,
    FetchError,
    LibraryFormatError,
    ValueError,
    click.UsageError,
)


def _open_store(config: AppConfig) -> JobStore:
    path = Path(config.store_path)
    if path.parent and str(path.parent) not in (".", ""):
        path.parent.mkdir(parents=True, exist_ok=True)
    return JobStore(
        path,
        max_rows=config.max_rows,
        query_timeout_s=config.query_timeout_ms / 1000.0,
    )


def _chat_provider(config: AppConfig):
    if config.provider_kind == "scripted":
        if not config.script_path:
            raise ConfigError("provider.kind=scripted requires provider.script_path")
        responses = json.loads(Path(config.script_path).read_text(encoding="utf-8"))
        if not isinstance(responses, list):
            raise ConfigError("provider.script_path must hold a JSON array of responses")
        return ScriptedChatProvider(responses)
    return RemoteChatProvider(
        endpoint=config.chat_endpoint,
        model=config.model,
        timeout_ms=config.timeout_ms,
        api_key_env=config.api_key_env,
    )


def _embedder(config: AppConfig):
    if config.embedder_kind == "remote":
        return RemoteEmbeddingProvider(
            endpoint=config.embed_endpoint,
            model=config.model,
            timeout_ms=config.timeout_ms,
            api_key_env=config.api_key_env,
        )
    if config.vocab_path:
        vocab = json.loads(Path(config.vocab_path).read_text(encoding="utf-8"))
        return BagOfTokensEmbedder(vocab)
    # Derive the vocabulary from the skill library texts.
    data = json.loads(Path(config.skills_path).read_text(encoding="utf-8"))
    texts = [
        ", ".join([item["name"], *item.get("aliases", [])]) for item in data
    ]
    return BagOfTokensEmbedder(build_vocabulary(texts))


def _library(config: AppConfig, embedder, skills_path: str | None = None) -> SkillLibrary:
    return load_skill_library(skills_path or config.skills_path, embedder)


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None, help="Path to a JSON config file.")
@click.pass_context
def cli(ctx: click.Context, config_path: str | None):
    """marketlens: job-market intelligence pipeline and analyst agent."""
    ctx.obj = load_config(config_path)


@cli.command()
@click.option("--source", "locator", required=True, help="Corpus file, directory, or URL.")
@click.pass_obj
def ingest(config: AppConfig, locator: str):
    """Run the full pipeline over a source: ingest, extract, label, store."""
    if "://" in locator:
        source = SourceSpec(kind="http", locator=locator)
    elif Path(locator).is_dir():
        source = SourceSpec(kind="directory", locator=locator)
    else:
        source = SourceSpec(kind="file", locator=locator)
    store = _open_store(config)
    embedder = _embedder(config)
    library = _library(config, embedder)
    chat = _chat_provider(config)
    report = run_pipeline(store, source, chat, library, embedder, k=config.k_labels)
    for key, value in {**report.summary(), "duplicates_skipped": report.ingest.duplicates_skipped}.items():
        click.echo(f"{key}: {value}")
    for loc, message in report.ingest.failures:
        click.echo(f"failure: {loc}: {message}")


@cli.command()
@click.option("--skills", "skills_path", required=True, type=click.Path(exists=True))
@click.pass_obj
def enrich(config: AppConfig, skills_path: str):
    """Re-label every stored job against a skill library."""
    store = _open_store(config)
    embedder = _embedder(config)
    library = _library(config, embedder, skills_path)
    count = relabel_all(store, library, embedder, k=config.k_labels)
    click.echo(f"relabeled: {count}")


@cli.command()
@click.argument("question")
@click.option("--session", "session_id", default=None, help="Continue an existing session.")
@click.option("--trace", is_flag=True, help="Print the thought/action/observation trace.")
@click.pass_obj
def ask(config: AppConfig, question: str, session_id: str | None, trace: bool):
    """Ask the analyst agent one question."""
    store = _open_store(config)
    embedder = _embedder(config)
    chat = _chat_provider(config)
    toolbox = Toolbox(store, embedder=embedder, advisor_chat=chat)
    registry = toolbox.build_registry()

    sessions = SessionStore(config.state_dir)
    if session_id is None:
        record = sessions.create()
        session_id = record["session_id"]
    else:
        record = sessions.get(session_id)
        if record is None:
            raise click.UsageError(f"unknown session {session_id}")
    history = [(t["user_message"], t["final_answer"]) for t in record["turns"]]
    session = AgentSession(session_id=session_id, history=history)

    turn = run_react(session, question, registry, chat, max_steps=config.max_steps)
    charts = ChartStore(config.state_dir)
    for chart in turn.charts:
        charts.save(chart)
    sessions.append_turn(session_id, turn_to_dict(turn))

    if turn.status == "provider_error":
        raise ProviderError("network", f"chat provider failed ({type(chat).__name__} at "
                            f"{getattr(chat, 'endpoint', 'scripted')})")
    click.echo(turn.final_answer if turn.status == "ok" else f"(no answer: {turn.status})")
    if trace:
        for step in turn.steps:
            click.echo(f"[{step.index}] thought: {step.thought}")
            click.echo(f"[{step.index}] action: {step.tool} {json.dumps(dict(step.args))}")
            click.echo(f"[{step.index}] observation: {step.observation}")
    click.echo(f"session: {session_id}", err=True)


@cli.command("top-skills")
@click.option("-n", "count", default=10, show_default=True, type=int)
@click.pass_obj
def top_skills(config: AppConfig, count: int):
    """Print the most in-demand skills with posting counts."""
    if count < 1:
        raise click.UsageError("-n must be >= 1")
    store = _open_store(config)
    for name, postings in store.top_skills(count):
        click.echo(f"{name} {postings}")


@cli.command("export-chart")
@click.argument("chart_id")
@click.option("-o", "output", required=True, type=click.Path())
@click.pass_obj
def export_chart(config: AppConfig, chart_id: str, output: str):
    """Write a stored ChartSpec to a JSON file."""
    charts = ChartStore(config.state_dir)
    spec = charts.get(chart_id)
    if spec is None:
        raise click.UsageError(f"unknown chart {chart_id}")
    Path(output).write_text(json.dumps(spec, ensure_ascii=False, indent=2), encoding="utf-8")
    click.echo(f"wrote {output}")


@cli.command()
@click.pass_obj
def serve(config: AppConfig):
    """Serve the HTTP API."""
    import uvicorn

    store = _open_store(config)
    embedder = _embedder(config)
    chat = _chat_provider(config)
    toolbox = Toolbox(store, embedder=embedder, advisor_chat=chat)

    def pipeline_runner(source: SourceSpec):
        library = _library(config, embedder)
        return run_pipeline(store, source, chat, library, embedder, k=config.k_labels)

    app = create_app(
        store=store,
        registry=toolbox.build_registry(),
        chat=chat,
        state_dir=config.state_dir,
        pipeline_runner=pipeline_runner,
        max_steps=config.max_steps,
        cors_origins=config.cors_origins,
    )
    uvicorn.run(app, host=config.host, port=config.port)


def main(argv: list[str] | None = None) -> int:
    """Run the CLI, mapping errors onto the documented exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False, obj=None)
        return 0
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        if exc.ctx is not None:
            click.echo(exc.ctx.get_usage(), err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        return 1
    except USER_ERROR_TYPES as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except (ProviderError, StorageError, MarketLensError) as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except Exception as exc:  # pragma: no cover - last-resort diagnostics
        click.echo(f"internal error: {exc}", err=True)
        return 2


def entrypoint() -> None:
    sys.exit(main())
