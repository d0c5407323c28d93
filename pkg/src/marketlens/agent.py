"""ReAct engine: tool registry, directive parsing, and the reason/act/observe
loop.

The model's entire action surface is one fenced JSON object per reply,
either

    {"type": "action", "thought": "...", "tool": "...", "args": {...}}
    {"type": "final",  "thought": "...", "answer": "..."}

Tool failures never abort a turn: unknown tools, bad arguments and handler
errors all come back as observations so the model can self-correct.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from ._json import find_json_object
from .errors import (
    DirectiveParseError,
    DuplicateTool,
    EmptyRegistry,
    MarketLensError,
    ParseError,
    ProviderError,
)
from .providers import ChatMessage, ChatProvider, DecodingParams

__all__ = [
    "ToolDescriptor",
    "ToolResult",
    "ToolRegistry",
    "AgentDirective",
    "TraceStep",
    "AgentTurn",
    "AgentSession",
    "render_system_prompt",
    "parse_agent_output",
    "run_react",
    "turn_to_dict",
    "turn_to_json",
    "DEFAULT_MAX_STEPS",
    "OBSERVATION_LIMIT",
]

DEFAULT_MAX_STEPS = 8
OBSERVATION_LIMIT = 4000
TRUNCATION_MARKER = "…[truncated]"

# Identical (tool, args) issued this many times consecutively triggers the
# loop guard instead of another execution.
LOOP_GUARD_THRESHOLD = 3
LOOP_GUARD_OBSERVATION = (
    "error: this exact action was already issued with the same arguments and "
    "the result will not change. Change strategy or give your final answer."
)

_NAME_RE = re.compile(r"^[a-z][a-z0-9_]*$")
_ARG_TYPES = ("string", "integer", "number", "boolean")


@dataclass(frozen=True)
class ToolDescriptor:
    name: str
    description: str
    arg_schema: tuple[tuple[str, str, bool], ...] = ()  # (arg name, type tag, required)

    def __post_init__(self):
        if not _NAME_RE.match(self.name):
            raise ValueError(f"tool name {self.name!r} must match [a-z][a-z0-9_]*")
        for arg_name, type_tag, _required in self.arg_schema:
            if type_tag not in _ARG_TYPES:
                raise ValueError(f"arg {arg_name!r}: type must be one of {_ARG_TYPES}")


@dataclass(frozen=True)
class ToolResult:
    """What a handler returns: the text the model sees plus optional
    structured artifacts (charts by value, advice payloads for callers)."""

    observation: str
    charts: tuple = ()
    payload: object | None = None


ToolHandler = Callable[[dict], ToolResult]


class ToolRegistry:
    """Named tools with argument schemas; immutable once the agent starts."""

    def __init__(self):
        self._tools: dict[str, tuple[ToolDescriptor, ToolHandler]] = {}

    def register(self, descriptor: ToolDescriptor, handler: ToolHandler) -> "ToolRegistry":
        if descriptor.name in self._tools:
            raise DuplicateTool(f"tool {descriptor.name!r} already registered")
        self._tools[descriptor.name] = (descriptor, handler)
        return self

    def names(self) -> list[str]:
        return list(self._tools)

    def descriptors(self) -> list[ToolDescriptor]:
        return [desc for desc, _ in self._tools.values()]

    def get(self, name: str) -> tuple[ToolDescriptor, ToolHandler] | None:
        return self._tools.get(name)

    def __len__(self) -> int:
        return len(self._tools)


def _describe_args(descriptor: ToolDescriptor) -> str:
    if not descriptor.arg_schema:
        return "no arguments"
    parts = []
    for arg_name, type_tag, required in descriptor.arg_schema:
        marker = "required" if required else "optional"
        parts.append(f"{arg_name} ({type_tag}, {marker})")
    return ", ".join(parts)


def render_system_prompt(registry: ToolRegistry) -> str:
    """System prompt enumerating every tool and fixing the output contract."""
    if len(registry) == 0:
        raise EmptyRegistry("cannot render a system prompt for an empty registry")
    lines = [
        "You are a job-market analyst agent. You answer questions about job",
        "postings, skills, companies and salaries using tools.",
        "",
        "Mandatory tool-use policy: every quantitative claim (counts, rankings,",
        "salaries, dates) in your final answer must come from a tool observation",
        "in this conversation. If you have not observed a number, you must not",
        "state it.",
        "",
        "Available tools:",
    ]
    for descriptor in registry.descriptors():
        lines.append(f"- {descriptor.name}: {descriptor.description}")
        lines.append(f"  arguments: {_describe_args(descriptor)}")
    lines += [
        "",
        "Reply with exactly one fenced JSON object and nothing else. To call a",
        "tool, reply:",
        "```json",
        '{"type": "action", "thought": "<why this tool>", "tool": "<tool name>", "args": {...}}',
        "```",
        "When you can answer, reply:",
        "```json",
        '{"type": "final", "thought": "<why you are done>", "answer": "<answer for the user>"}',
        "```",
    ]
    return "\n".join(lines)


@dataclass(frozen=True)
class AgentDirective:
    kind: str  # "action" | "final"
    thought: str
    tool: str = ""
    args: Mapping = field(default_factory=dict)
    answer: str = ""


def parse_agent_output(text: str) -> AgentDirective:
    """Decode the first fenced JSON object in model output into a directive."""
    try:
        obj, _ = find_json_object(text)
    except ParseError as exc:
        raise DirectiveParseError("no_json_object", str(exc)) from exc

    kind = obj.get("type")
    if kind not in ("action", "final"):
        raise DirectiveParseError(
            "bad_discriminator",
            f'"type" must be "action" or "final", got {kind!r}',
        )
    required = ("thought", "tool", "args") if kind == "action" else ("thought", "answer")
    missing = [key for key in required if key not in obj]
    if missing:
        raise DirectiveParseError(
            "missing_fields:" + ",".join(missing),
            f"directive is missing required fields: {', '.join(missing)}",
        )
    if kind == "action":
        if not isinstance(obj["args"], dict):
            raise DirectiveParseError("bad_args", '"args" must be a JSON object')
        if not isinstance(obj["tool"], str) or not obj["tool"]:
            raise DirectiveParseError("bad_tool", '"tool" must be a non-empty string')
        return AgentDirective(
            kind="action",
            thought=str(obj.get("thought", "")),
            tool=obj["tool"],
            args=dict(obj["args"]),
        )
    if not isinstance(obj["answer"], str) or not obj["answer"]:
        raise DirectiveParseError("empty_answer", '"answer" must be a non-empty string')
    return AgentDirective(kind="final", thought=str(obj.get("thought", "")), answer=obj["answer"])


@dataclass(frozen=True)
class TraceStep:
    index: int
    thought: str
    tool: str
    args: Mapping
    observation: str
    artifacts: tuple[str, ...] = ()


@dataclass(frozen=True)
class AgentTurn:
    session_id: str
    user_message: str
    steps: tuple[TraceStep, ...]
    final_answer: str
    charts: tuple = ()  # ChartSpec values produced during the turn
    status: str = "ok"  # ok | step_limit | provider_error

    def __post_init__(self):
        if (self.status == "ok") != bool(self.final_answer):
            raise ValueError("status=ok iff final_answer is non-empty")


@dataclass
class AgentSession:
    """Prior turns feed later ones: user messages and final answers only,
    full traces are not re-sent."""

    session_id: str
    history: list[tuple[str, str]] = field(default_factory=list)

    def remember(self, turn: AgentTurn) -> None:
        self.history.append((turn.user_message, turn.final_answer))


def _truncate_observation(text: str) -> str:
    if len(text) <= OBSERVATION_LIMIT:
        return text
    return text[: OBSERVATION_LIMIT - len(TRUNCATION_MARKER)] + TRUNCATION_MARKER


def _validate_args(descriptor: ToolDescriptor, args: Mapping) -> str | None:
    """Returns an error message, or None when args decode against the schema."""
    known = {name: (type_tag, required) for name, type_tag, required in descriptor.arg_schema}
    for name in args:
        if name not in known:
            return f"unexpected argument {name!r} for tool {descriptor.name!r}"
    for name, (type_tag, required) in known.items():
        if name not in args:
            if required:
                return f"missing required argument {name!r} for tool {descriptor.name!r}"
            continue
        value = args[name]
        ok = (
            isinstance(value, str)
            if type_tag == "string"
            else isinstance(value, bool)
            if type_tag == "boolean"
            else isinstance(value, int) and not isinstance(value, bool)
            if type_tag == "integer"
            else isinstance(value, (int, float)) and not isinstance(value, bool)
        )
        if not ok:
            return f"argument {name!r} must be of type {type_tag}"
    return None


_REPAIR_TEMPLATE = (
    "Your last reply was not a valid directive ({reason}). Reply with exactly "
    'one fenced JSON object: {{"type": "action", "thought": ..., "tool": ..., '
    '"args": {{...}}}} or {{"type": "final", "thought": ..., "answer": ...}}.'
)


def run_react(
    session: AgentSession,
    user_message: str,
    registry: ToolRegistry,
    chat: ChatProvider,
    max_steps: int = DEFAULT_MAX_STEPS,
    params: DecodingParams = DecodingParams(),
) -> AgentTurn:
    """Drive one conversational turn through the reason/act/observe loop.

    Stops at the first final directive (status ``ok``), after ``max_steps``
    recorded steps (status ``step_limit``), or on a provider failure
    (status ``provider_error``, partial trace preserved). One repair
    re-prompt per malformed directive; the second consecutive failure is
    recorded as a step whose observation is the error text.
    """
    if len(registry) == 0:
        raise EmptyRegistry("agent cannot run without tools")
    if not user_message:
        raise ValueError("user_message must be non-empty")

    messages: list[ChatMessage] = [ChatMessage("system", render_system_prompt(registry))]
    for past_user, past_answer in session.history:
        messages.append(ChatMessage("user", past_user))
        if past_answer:
            messages.append(ChatMessage("assistant", past_answer))
    messages.append(ChatMessage("user", user_message))

    steps: list[TraceStep] = []
    charts: list = []
    repeat_key: str | None = None
    repeat_count = 0

    def _finish(status: str, answer: str = "") -> AgentTurn:
        return AgentTurn(
            session_id=session.session_id,
            user_message=user_message,
            steps=tuple(steps),
            final_answer=answer,
            charts=tuple(charts),
            status=status,
        )

    while len(steps) < max_steps:
        try:
            raw = chat.chat(messages, params)
        except ProviderError:
            return _finish("provider_error")

        directive: AgentDirective | None = None
        try:
            directive = parse_agent_output(raw)
        except DirectiveParseError as first_error:
            messages.append(ChatMessage("assistant", raw or "(empty)"))
            messages.append(
                ChatMessage("user", _REPAIR_TEMPLATE.format(reason=first_error.reason))
            )
            try:
                raw = chat.chat(messages, params)
                directive = parse_agent_output(raw)
            except ProviderError:
                return _finish("provider_error")
            except DirectiveParseError as second_error:
                observation = f"error: malformed directive: {second_error.reason}"
                messages.append(ChatMessage("assistant", raw or "(empty)"))
                messages.append(ChatMessage("user", f"Observation: {observation}"))
                steps.append(
                    TraceStep(
                        index=len(steps) + 1,
                        thought="",
                        tool="",
                        args={},
                        observation=observation,
                    )
                )
                continue

        if directive.kind == "final":
            return _finish("ok", directive.answer)

        messages.append(ChatMessage("assistant", raw))
        observation, artifacts = _dispatch(registry, directive, charts, repeat_key, repeat_count)

        key = directive.tool + "\x00" + json.dumps(directive.args, sort_keys=True)
        repeat_count = repeat_count + 1 if key == repeat_key else 1
        repeat_key = key

        observation = _truncate_observation(observation)
        steps.append(
            TraceStep(
                index=len(steps) + 1,
                thought=directive.thought,
                tool=directive.tool,
                args=dict(directive.args),
                observation=observation,
                artifacts=tuple(artifacts),
            )
        )
        header = directive.tool if directive.tool else "observation"
        messages.append(ChatMessage("tool", f"{header}: {observation}"))

    return _finish("step_limit")


def _dispatch(
    registry: ToolRegistry,
    directive: AgentDirective,
    charts: list,
    repeat_key: str | None,
    repeat_count: int,
) -> tuple[str, list[str]]:
    key = directive.tool + "\x00" + json.dumps(directive.args, sort_keys=True)
    if key == repeat_key and repeat_count + 1 >= LOOP_GUARD_THRESHOLD:
        return LOOP_GUARD_OBSERVATION, []

    entry = registry.get(directive.tool)
    if entry is None:
        return (
            f"error: unknown tool {directive.tool!r}; available: {', '.join(registry.names())}",
            [],
        )
    descriptor, handler = entry
    problem = _validate_args(descriptor, directive.args)
    if problem is not None:
        return f"error: {problem}", []
    try:
        result = handler(dict(directive.args))
    except MarketLensError as exc:
        return f"error: tool {directive.tool!r} failed: {exc}", []
    artifacts = []
    seen = {chart.chart_id for chart in charts}
    for chart in result.charts:
        if chart.chart_id not in seen:
            charts.append(chart)
        artifacts.append(chart.chart_id)
    return result.observation, artifacts


def turn_to_dict(turn: AgentTurn) -> dict:
    """Replay/golden-file form; charts travel as ids, fetchable by id."""
    return {
        "session_id": turn.session_id,
        "user_message": turn.user_message,
        "steps": [
            {
                "index": s.index,
                "thought": s.thought,
                "tool": s.tool,
                "args": dict(s.args),
                "observation": s.observation,
                "artifacts": list(s.artifacts),
            }
            for s in turn.steps
        ],
        "final_answer": turn.final_answer,
        "charts": [chart.chart_id for chart in turn.charts],
        "status": turn.status,
    }


def turn_to_json(turn: AgentTurn) -> str:
    return json.dumps(turn_to_dict(turn), ensure_ascii=False)
