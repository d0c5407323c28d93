"""Application configuration: a flat JSON document of dotted keys.

Every key is optional; defaults target a local, offline-friendly setup.

    store.path             SQLite file for the job store
    state.dir              directory for sessions and chart artifacts
    skills.path            skill library JSON (array of {"name","aliases"})
    provider.kind          "remote" | "scripted"
    provider.chat_endpoint / provider.embed_endpoint
    provider.model
    provider.timeout_ms
    provider.api_key_env   env var holding the API key
    provider.script_path   scripted chat responses (JSON array of strings)
    embedder.kind          "bag_of_tokens" | "remote"
    embedder.vocab_path    token list for bag_of_tokens; omit to derive the
                           vocabulary from the skill library texts
    agent.max_steps
    labels.k
    query.max_rows
    query.timeout_ms
    server.host / server.port / server.cors_origins
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

__all__ = ["AppConfig", "load_config"]


@dataclass(frozen=True)
class AppConfig:
    store_path: str = "data/marketlens.db"
    state_dir: str = "data/state"
    skills_path: str = "data/skills.json"
    provider_kind: str = "remote"
    chat_endpoint: str = "http://localhost:9000/v1/chat"
    embed_endpoint: str = "http://localhost:9000/v1/embed"
    model: str = "default"
    timeout_ms: int = 30_000
    api_key_env: str = "MARKETLENS_LLM_API_KEY"
    script_path: str | None = None
    embedder_kind: str = "bag_of_tokens"
    vocab_path: str | None = None
    max_steps: int = 8
    k_labels: int = 10
    max_rows: int = 500
    query_timeout_ms: int = 5_000
    host: str = "127.0.0.1"
    port: int = 8800
    cors_origins: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        for name in ("timeout_ms", "max_steps", "k_labels", "max_rows", "query_timeout_ms", "port"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.provider_kind not in ("remote", "scripted"):
            raise ConfigError(f"provider.kind must be 'remote' or 'scripted', got {self.provider_kind!r}")
        if self.embedder_kind not in ("remote", "bag_of_tokens"):
            raise ConfigError(f"embedder.kind must be 'remote' or 'bag_of_tokens', got {self.embedder_kind!r}")


_KEY_MAP = {
    "store.path": "store_path",
    "state.dir": "state_dir",
    "skills.path": "skills_path",
    "provider.kind": "provider_kind",
    "provider.chat_endpoint": "chat_endpoint",
    "provider.embed_endpoint": "embed_endpoint",
    "provider.model": "model",
    "provider.timeout_ms": "timeout_ms",
    "provider.api_key_env": "api_key_env",
    "provider.script_path": "script_path",
    "embedder.kind": "embedder_kind",
    "embedder.vocab_path": "vocab_path",
    "agent.max_steps": "max_steps",
    "labels.k": "k_labels",
    "query.max_rows": "max_rows",
    "query.timeout_ms": "query_timeout_ms",
    "server.host": "host",
    "server.port": "port",
    "server.cors_origins": "cors_origins",
}


def load_config(path: str | Path | None = None) -> AppConfig:
    """Read a flat JSON config file; a missing ``path`` yields pure defaults."""
    if path is None:
        return AppConfig()
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a JSON object of dotted keys")

    kwargs: dict = {}
    for key, value in data.items():
        attr = _KEY_MAP.get(key)
        if attr is None:
            raise ConfigError(f"unknown config key {key!r}")
        if attr == "cors_origins":
            if not isinstance(value, list):
                raise ConfigError("server.cors_origins must be a JSON array")
            value = tuple(value)
        kwargs[attr] = value
    try:
        return AppConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
