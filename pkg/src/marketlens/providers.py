"""Pluggable boundary to language and embedding models.

Two protocols (chat completion, text embedding), one remote HTTP
implementation of each, and the deterministic test implementations the rest
of the suite is built on: a scripted chat provider and a bag-of-tokens
embedder.

The remote wire format is a minimal JSON POST, vendor-neutral:

    chat:  POST <chat_endpoint>   {"model", "temperature", "max_output_chars",
                                   "messages": [{"role", "content"}, ...]}
           -> 200 {"content": "<assistant text>"}
    embed: POST <embed_endpoint>  {"model", "input": "<text>"}
           -> 200 {"embedding": [<float>, ...]}

Authentication is a bearer token read from an environment variable
(default ``MARKETLENS_LLM_API_KEY``). The key is never logged or carried in
``repr``.
"""

from __future__ import annotations

import logging
import os
import re
import threading
from dataclasses import dataclass, field
from typing import Protocol, Sequence, runtime_checkable

import httpx
import numpy as np

from .errors import DegenerateEmbedding, ProviderError

__all__ = [
    "ChatMessage",
    "DecodingParams",
    "ChatProvider",
    "EmbeddingProvider",
    "ScriptedChatProvider",
    "BagOfTokensEmbedder",
    "build_vocabulary",
    "RemoteChatProvider",
    "RemoteEmbeddingProvider",
    "DEFAULT_API_KEY_ENV",
]

logger = logging.getLogger(__name__)

DEFAULT_API_KEY_ENV = "MARKETLENS_LLM_API_KEY"

_ROLES = ("system", "user", "assistant", "tool")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in _ROLES:
            raise ValueError(f"role must be one of {_ROLES}, got {self.role!r}")
        if self.role in ("system", "user") and not self.content:
            raise ValueError(f"{self.role} message content must be non-empty")


@dataclass(frozen=True)
class DecodingParams:
    temperature: float = 0.0
    max_output_chars: int = 8192

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_chars <= 0:
            raise ValueError("max_output_chars must be positive")


def _check_messages(messages: Sequence[ChatMessage]) -> None:
    if not messages:
        raise ValueError("messages must be non-empty")
    if messages[0].role != "system":
        raise ValueError("first message must have role 'system'")


@runtime_checkable
class ChatProvider(Protocol):
    def chat(self, messages: Sequence[ChatMessage], params: DecodingParams) -> str:
        ...


@runtime_checkable
class EmbeddingProvider(Protocol):
    def embed(self, text: str) -> np.ndarray:
        ...


class ScriptedChatProvider:
    """Returns a fixed sequence of responses, one per call.

    Deterministic by construction; exhausting the script raises. Cursor
    advancement is serialized so concurrent calls each consume exactly one
    response.
    """

    def __init__(self, responses: Sequence[str]):
        self._responses = list(responses)
        self._cursor = 0
        self._lock = threading.Lock()

    @property
    def calls(self) -> int:
        return self._cursor

    @property
    def remaining(self) -> int:
        return len(self._responses) - self._cursor

    def chat(self, messages: Sequence[ChatMessage], params: DecodingParams) -> str:
        _check_messages(messages)
        with self._lock:
            if self._cursor >= len(self._responses):
                raise ProviderError(
                    "script_exhausted",
                    f"scripted provider exhausted after {len(self._responses)} responses",
                )
            response = self._responses[self._cursor]
            self._cursor += 1
        return response


_TOKEN_SPLIT = re.compile(r"[^a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs."""
    return [t for t in _TOKEN_SPLIT.split(text.lower()) if t]


def build_vocabulary(texts: Sequence[str]) -> tuple[str, ...]:
    """Sorted unique tokens over a corpus of texts."""
    vocab: set[str] = set()
    for text in texts:
        vocab.update(tokenize(text))
    return tuple(sorted(vocab))


class BagOfTokensEmbedder:
    """Deterministic count-vector embedder over a fixed vocabulary.

    Each text becomes the vector of its in-vocabulary token counts,
    L2-normalized. An analyzable stand-in for a semantic model: texts
    sharing tokens score high, token repetition does not change direction.
    """

    def __init__(self, vocabulary: Sequence[str]):
        if not vocabulary:
            raise ValueError("vocabulary must be non-empty")
        self.vocabulary = tuple(vocabulary)
        if len(set(self.vocabulary)) != len(self.vocabulary):
            raise ValueError("vocabulary tokens must be unique")
        self._index = {token: i for i, token in enumerate(self.vocabulary)}

    @property
    def dim(self) -> int:
        return len(self.vocabulary)

    @classmethod
    def from_texts(cls, texts: Sequence[str]) -> "BagOfTokensEmbedder":
        return cls(build_vocabulary(texts))

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise ValueError("text must be non-empty")
        counts = np.zeros(len(self.vocabulary), dtype=np.float64)
        for token in tokenize(text):
            idx = self._index.get(token)
            if idx is not None:
                counts[idx] += 1.0
        norm = float(np.linalg.norm(counts))
        if norm == 0.0:
            raise DegenerateEmbedding(f"no in-vocabulary tokens in {text[:80]!r}")
        return counts / norm


class _RemoteBase:
    def __init__(
        self,
        endpoint: str,
        model: str,
        timeout_ms: int = 30_000,
        api_key_env: str = DEFAULT_API_KEY_ENV,
        auth_header: str = "Authorization",
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.timeout_s = timeout_ms / 1000.0
        self.api_key_env = api_key_env
        self.auth_header = auth_header
        self._transport = transport

    def __repr__(self):  # credentials must never leak through repr
        return f"{type(self).__name__}(endpoint={self.endpoint!r}, model={self.model!r})"

    def _headers(self) -> dict[str, str]:
        key = os.environ.get(self.api_key_env, "")
        if not key:
            raise ProviderError("auth", f"missing API key: set ${self.api_key_env}")
        return {self.auth_header: f"Bearer {key}"}

    def _post(self, payload: dict) -> dict:
        headers = self._headers()
        logger.debug("POST %s model=%s", self.endpoint, self.model)
        try:
            with httpx.Client(transport=self._transport, timeout=self.timeout_s) as client:
                response = client.post(self.endpoint, json=payload, headers=headers)
        except httpx.TimeoutException as exc:
            raise ProviderError("timeout", f"{self.endpoint}: {exc}") from exc
        except httpx.HTTPError as exc:
            raise ProviderError("network", f"{self.endpoint}: {exc}") from exc
        if response.status_code in (401, 403):
            raise ProviderError("auth", f"{self.endpoint}: HTTP {response.status_code}")
        if response.status_code == 429:
            raise ProviderError("rate_limited", f"{self.endpoint}: HTTP 429")
        if response.status_code != 200:
            raise ProviderError("network", f"{self.endpoint}: HTTP {response.status_code}")
        try:
            return response.json()
        except ValueError as exc:
            raise ProviderError("network", f"{self.endpoint}: non-JSON response") from exc


class RemoteChatProvider(_RemoteBase):
    """One HTTP POST per chat call against the configured endpoint."""

    def chat(self, messages: Sequence[ChatMessage], params: DecodingParams) -> str:
        _check_messages(messages)
        payload = {
            "model": self.model,
            "temperature": params.temperature,
            "max_output_chars": params.max_output_chars,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
        }
        body = self._post(payload)
        content = body.get("content")
        if not isinstance(content, str):
            raise ProviderError("network", f"{self.endpoint}: malformed chat response")
        return content


class RemoteEmbeddingProvider(_RemoteBase):
    """One HTTP POST per embedding call; returns the raw (unnormalized) vector."""

    def embed(self, text: str) -> np.ndarray:
        if not text:
            raise ValueError("text must be non-empty")
        body = self._post({"model": self.model, "input": text})
        vector = body.get("embedding")
        if not isinstance(vector, list) or not vector:
            raise ProviderError("network", f"{self.endpoint}: malformed embedding response")
        return np.asarray(vector, dtype=np.float64)
