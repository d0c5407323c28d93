import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from marketlens.agent import (
    LOOP_GUARD_OBSERVATION,
    OBSERVATION_LIMIT,
    AgentSession,
    ToolDescriptor,
    ToolRegistry,
    ToolResult,
    parse_agent_output,
    render_system_prompt,
    run_react,
    turn_to_dict,
    turn_to_json,
)
from marketlens.errors import DirectiveParseError, DuplicateTool, EmptyRegistry
from marketlens.providers import ScriptedChatProvider


def echo_registry(observation="observed", calls=None):
    registry = ToolRegistry()

    def handler(args):
        if calls is not None:
            calls.append(args)
        return ToolResult(observation=observation)

    registry.register(
        ToolDescriptor(
            name="get_top_skills",
            description="top skills",
            arg_schema=(("n", "integer", False),),
        ),
        handler,
    )
    registry.register(
        ToolDescriptor(
            name="query_database",
            description="run sql",
            arg_schema=(("sql", "string", True),),
        ),
        handler,
    )
    return registry


def action(tool="get_top_skills", args=None, thought="need data"):
    return json.dumps({"type": "action", "thought": thought, "tool": tool, "args": args or {}})


def final(answer="All done.", thought="done"):
    return json.dumps({"type": "final", "thought": thought, "answer": answer})


def session():
    return AgentSession(session_id="s1")


class TestRegistry:
    def test_register_and_list(self):
        registry = echo_registry()
        assert "get_top_skills" in registry.names()

    def test_duplicate_rejected(self):
        registry = echo_registry()
        with pytest.raises(DuplicateTool):
            registry.register(
                ToolDescriptor(name="get_top_skills", description="again"), lambda a: ToolResult("")
            )

    def test_bad_name_pattern_rejected(self):
        with pytest.raises(ValueError):
            ToolDescriptor(name="Get-Top", description="nope")


class TestSystemPrompt:
    def test_mentions_every_tool(self):
        prompt = render_system_prompt(echo_registry())
        assert "get_top_skills" in prompt
        assert "query_database" in prompt

    def test_contains_type_contract_and_policy(self):
        prompt = render_system_prompt(echo_registry())
        assert '"type"' in prompt
        assert "action" in prompt and "final" in prompt
        assert "tool observation" in prompt  # mandatory tool-use policy

    def test_empty_registry_rejected(self):
        with pytest.raises(EmptyRegistry):
            render_system_prompt(ToolRegistry())


class TestParseAgentOutput:
    def test_action_directive(self):
        directive = parse_agent_output(action(args={"n": 10}))
        assert directive.kind == "action"
        assert directive.tool == "get_top_skills"
        assert directive.args == {"n": 10}

    def test_final_directive(self):
        directive = parse_agent_output(final("The top skills are ..."))
        assert directive.kind == "final"
        assert directive.answer == "The top skills are ..."

    def test_fenced_with_prose(self):
        text = "Thinking aloud.\n```json\n" + action() + "\n```\ntrailing words"
        assert parse_agent_output(text).kind == "action"

    def test_missing_fields_listed(self):
        with pytest.raises(DirectiveParseError) as err:
            parse_agent_output('{"type": "action", "tool": "x"}')
        assert "missing_fields" in err.value.reason
        assert "thought" in err.value.reason and "args" in err.value.reason

    def test_bad_discriminator(self):
        with pytest.raises(DirectiveParseError) as err:
            parse_agent_output('{"type": "noop"}')
        assert err.value.reason == "bad_discriminator"

    def test_no_json(self):
        with pytest.raises(DirectiveParseError) as err:
            parse_agent_output("no structured content")
        assert err.value.reason == "no_json_object"


class TestRunReact:
    def test_single_action_then_final(self):
        chat = ScriptedChatProvider([action(args={"n": 3}), final("The top skills are A, B, C.")])
        turn = run_react(session(), "top skills?", echo_registry(), chat)
        assert turn.status == "ok"
        assert len(turn.steps) == 1
        assert turn.steps[0].tool == "get_top_skills"
        assert turn.steps[0].args == {"n": 3}
        assert turn.steps[0].observation == "observed"
        assert turn.final_answer == "The top skills are A, B, C."

    def test_step_limit_on_never_finalizing_script(self):
        chat = ScriptedChatProvider([action(args={"n": i}) for i in range(9)])
        turn = run_react(session(), "keep going", echo_registry(), chat, max_steps=8)
        assert turn.status == "step_limit"
        assert len(turn.steps) == 8
        assert turn.final_answer == ""

    def test_unknown_tool_becomes_observation(self):
        chat = ScriptedChatProvider([action(tool="unknown_tool"), final("ok")])
        turn = run_react(session(), "q", echo_registry(), chat)
        assert turn.status == "ok"
        assert turn.steps[0].observation.startswith("error: unknown tool")

    def test_bad_args_become_observation(self):
        chat = ScriptedChatProvider([action(args={"n": "ten"}), final("ok")])
        turn = run_react(session(), "q", echo_registry(), chat)
        assert "must be of type integer" in turn.steps[0].observation

    def test_missing_required_arg_becomes_observation(self):
        chat = ScriptedChatProvider([action(tool="query_database", args={}), final("ok")])
        turn = run_react(session(), "q", echo_registry(), chat)
        assert "missing required argument" in turn.steps[0].observation

    def test_one_repair_per_malformed_output(self):
        chat = ScriptedChatProvider(["not a directive", final("recovered")])
        turn = run_react(session(), "q", echo_registry(), chat)
        assert turn.status == "ok"
        assert turn.steps == ()  # repaired before any step was recorded
        assert chat.calls == 2

    def test_two_consecutive_failures_become_failed_step(self):
        chat = ScriptedChatProvider(["bad", "also bad", action(), final("done")])
        turn = run_react(session(), "q", echo_registry(), chat)
        assert turn.status == "ok"
        assert len(turn.steps) == 2
        assert turn.steps[0].tool == ""
        assert turn.steps[0].observation.startswith("error: malformed directive")
        assert turn.steps[1].tool == "get_top_skills"
        assert chat.calls == 4

    def test_provider_error_preserves_partial_trace(self):
        chat = ScriptedChatProvider([action()])  # second call exhausts the script
        turn = run_react(session(), "q", echo_registry(), chat)
        assert turn.status == "provider_error"
        assert len(turn.steps) == 1
        assert turn.final_answer == ""

    def test_observation_truncated_with_marker(self):
        registry = echo_registry(observation="x" * 10_000)
        chat = ScriptedChatProvider([action(), final("ok")])
        turn = run_react(session(), "q", registry, chat)
        observation = turn.steps[0].observation
        assert len(observation) == OBSERVATION_LIMIT
        assert observation.endswith("…[truncated]")

    def test_loop_guard_on_third_identical_action(self):
        calls = []
        registry = echo_registry(calls=calls)
        chat = ScriptedChatProvider([action(args={"n": 1})] * 4 + [final("ok")])
        turn = run_react(session(), "q", registry, chat)
        observations = [s.observation for s in turn.steps]
        assert observations[0] == "observed"
        assert observations[1] == "observed"
        assert observations[2] == LOOP_GUARD_OBSERVATION
        assert observations[3] == LOOP_GUARD_OBSERVATION
        assert len(calls) == 2  # third and fourth were not executed

    def test_loop_guard_resets_on_different_args(self):
        calls = []
        registry = echo_registry(calls=calls)
        chat = ScriptedChatProvider(
            [action(args={"n": 1}), action(args={"n": 1}), action(args={"n": 2}),
             action(args={"n": 1}), final("ok")]
        )
        turn = run_react(session(), "q", registry, chat)
        assert all(s.observation == "observed" for s in turn.steps)
        assert len(calls) == 4

    def test_history_included_in_later_turns(self):
        seen = []

        class Recorder:
            def __init__(self):
                self.script = [final("second answer")]

            def chat(self, messages, params):
                seen.append([(m.role, m.content) for m in messages])
                return self.script.pop(0)

        sess = AgentSession(session_id="s1", history=[("first question", "first answer")])
        run_react(sess, "second question", echo_registry(), Recorder())
        roles = [r for r, _ in seen[0]]
        contents = [c for _, c in seen[0]]
        assert roles == ["system", "user", "assistant", "user"]
        assert "first question" in contents and "first answer" in contents

    def test_empty_registry_rejected(self):
        with pytest.raises(EmptyRegistry):
            run_react(session(), "q", ToolRegistry(), ScriptedChatProvider([])),


class TestTraceSerialization:
    def test_exact_field_names(self):
        chat = ScriptedChatProvider([action(args={"n": 2}), final("done")])
        turn = run_react(session(), "question", echo_registry(), chat)
        data = turn_to_dict(turn)
        assert list(data.keys()) == [
            "session_id", "user_message", "steps", "final_answer", "charts", "status",
        ]
        assert list(data["steps"][0].keys()) == [
            "index", "thought", "tool", "args", "observation", "artifacts",
        ]

    def test_deterministic_serialization(self):
        def one_turn():
            chat = ScriptedChatProvider([action(args={"n": 2}), final("done")])
            return turn_to_json(run_react(session(), "question", echo_registry(), chat))

        assert one_turn() == one_turn()

    def test_trace_alternation_invariant(self):
        chat = ScriptedChatProvider([action(args={"n": 1}), action(args={"n": 2}), final("x")])
        turn = run_react(session(), "q", echo_registry(), chat)
        assert [s.index for s in turn.steps] == [1, 2]
        for step in turn.steps:
            assert step.observation  # thought/action/observation all present

    def test_every_chart_traceable_to_a_step(self):
        from marketlens.toolbox import ChartSeries, build_chart

        registry = ToolRegistry()

        def charting(args):
            chart = build_chart(
                "bar", "t", "x", "y", ["a"], [ChartSeries("s", (float(args["n"]),))],
                {"tool": "charting", "params": dict(args)},
            )
            return ToolResult(observation="charted", charts=(chart,))

        registry.register(
            ToolDescriptor(name="charting", description="makes charts",
                           arg_schema=(("n", "integer", True),)),
            charting,
        )
        chat = ScriptedChatProvider(
            [action("charting", args={"n": 1}), action("charting", args={"n": 2}), final("done")]
        )
        turn = run_react(session(), "q", registry, chat)
        referenced = {artifact for step in turn.steps for artifact in step.artifacts}
        assert {chart.chart_id for chart in turn.charts} == referenced
        assert len(turn.charts) == 2


@settings(max_examples=60, deadline=None)
@given(
    script=st.lists(
        st.sampled_from(
            [
                action(args={"n": 1}),
                action(tool="nope"),
                action(args={"n": "bad"}),
                "garbage",
                final("fin"),
            ]
        ),
        min_size=1,
        max_size=24,
    )
)
def test_step_count_never_exceeds_max_steps(script):
    chat = ScriptedChatProvider(script)
    turn = run_react(session(), "q", echo_registry(), chat, max_steps=5)
    assert len(turn.steps) <= 5
    assert turn.status in ("ok", "step_limit", "provider_error")
    if turn.status == "ok":
        assert turn.final_answer
