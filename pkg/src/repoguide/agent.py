"""The planning agent: a bounded think/act/observe loop over the retrieval tools.

Each LLM turn yields exactly one decision (one tool action or a final plan),
recorded in a scratchpad the next turn can read. The scratchpad doubles as
the run's debugging trace.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources

from repoguide.providers import ProviderError
from repoguide.tools import TOOL_NAMES, RetrievalTools, ToolCall, render_response

TERM_FINISHED = "finished"
TERM_ITERATION_CAP = "iteration_cap"
TERM_LLM_FAILURE = "llm_failure"


class DecisionParseError(ValueError):
    pass


@dataclass(frozen=True)
class AgentConfig:
    max_iterations: int = 8
    max_tool_calls: int = 12
    scratchpad_budget: int = 20000
    prompt_set: str = "default"

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.max_tool_calls < 1:
            raise ValueError("max_tool_calls must be at least 1")


@dataclass
class ScratchpadEntry:
    step_index: int
    thought: str
    action: ToolCall | None = None
    observation: str | None = None


@dataclass
class PlanStep:
    index: int
    instruction: str
    evidence: list[dict] = field(default_factory=list)
    refined: bool = False


@dataclass
class AgentAnswer:
    plan: list[PlanStep]
    scratchpad: list[ScratchpadEntry]
    termination: str


@dataclass(frozen=True)
class ParsedDecision:
    thought: str
    tool_call: tuple[str, str] | None  # (tool_name, argument)
    final_steps: list[str] | None


def load_prompt_set(name: str = "default") -> dict:
    text = resources.files("repoguide").joinpath(f"prompts/{name}.json").read_text("utf-8")
    return json.loads(text)


_MARKER_RE = re.compile(r"^(ACTION:|FINAL:)", re.MULTILINE)
_ACTION_RE = re.compile(r"^ACTION:\s*([A-Za-z_][A-Za-z0-9_]*)\((.*)\)\s*$")
_STEP_RE = re.compile(r"^\s*(\d+)[.)]\s+(.*\S)\s*$")


def parse_agent_decision(llm_output: str) -> ParsedDecision:
    """Parse the rigid single-decision grammar.

    Exactly one marker line: `ACTION: tool(argument)` or `FINAL:` followed by
    a numbered step list. Free text before the marker is the thought.
    """
    markers = list(_MARKER_RE.finditer(llm_output))
    if len(markers) != 1:
        raise DecisionParseError(f"expected exactly one ACTION:/FINAL: marker, found {len(markers)}")
    marker = markers[0]
    thought = llm_output[: marker.start()].strip()

    if marker.group(1) == "ACTION:":
        line_end = llm_output.find("\n", marker.start())
        line = llm_output[marker.start() : line_end if line_end >= 0 else None].strip()
        m = _ACTION_RE.match(line)
        if not m:
            raise DecisionParseError(f"malformed ACTION line: {line!r}")
        tool_name, argument = m.group(1), m.group(2).strip()
        if tool_name not in TOOL_NAMES:
            raise DecisionParseError(f"unknown tool {tool_name!r}")
        if not argument:
            raise DecisionParseError("tool argument must be non-empty")
        return ParsedDecision(thought=thought, tool_call=(tool_name, argument), final_steps=None)

    body = llm_output[marker.end() :]
    steps: list[str] = []
    for line in body.splitlines():
        m = _STEP_RE.match(line)
        if m:
            steps.append(m.group(2))
        elif steps and line.strip():
            steps[-1] += " " + line.strip()
    if not steps:
        raise DecisionParseError("FINAL: marker with no numbered steps")
    return ParsedDecision(thought=thought, tool_call=None, final_steps=steps)


def _render_entry(entry: ScratchpadEntry, elide_observation: bool, elide_thought: bool) -> str:
    lines = []
    thought = entry.thought
    if elide_thought and thought:
        thought = f"[elided thought, {len(entry.thought)} chars]"
    lines.append(f"THOUGHT {entry.step_index}: {thought}")
    if entry.action is not None:
        lines.append(f"ACTION {entry.step_index}: {entry.action.tool_name}({entry.action.argument})")
    if entry.observation is not None:
        obs = entry.observation
        if elide_observation:
            obs = f"[elided observation, {len(entry.observation)} chars]"
        lines.append(f"OBSERVATION {entry.step_index}: {obs}")
    return "\n".join(lines)


def serialize_scratchpad(entries: list[ScratchpadEntry], budget: int = 20000) -> str:
    """Deterministic rendering; over budget, oldest observations (then oldest
    thoughts) collapse to one-line digests. ACTION lines are never elided."""
    if not entries:
        return ""

    def render(obs_elided: int, thoughts_elided: int) -> str:
        return "\n\n".join(
            _render_entry(e, elide_observation=i < obs_elided, elide_thought=i < thoughts_elided)
            for i, e in enumerate(entries)
        )

    out = render(0, 0)
    obs_elided = 0
    while len(out) > budget and obs_elided < len(entries):
        obs_elided += 1
        out = render(obs_elided, 0)
    thoughts_elided = 0
    while len(out) > budget and thoughts_elided < len(entries):
        thoughts_elided += 1
        out = render(obs_elided, thoughts_elided)
    return out


def _citations_from_response(status_ok: bool, payload) -> list[dict]:
    if not status_ok or not isinstance(payload, list):
        return []
    return [
        {
            "chunk_id": hit["chunk_id"],
            "source_url": hit["source_url"],
            "repo_path": hit["repo_path"],
            "char_start": hit["char_start"],
            "char_end": hit["char_end"],
        }
        for hit in payload
    ]


def run_onboarding_agent(
    question: str,
    tools: RetrievalTools,
    llm,
    config: AgentConfig = AgentConfig(),
) -> AgentAnswer:
    """Run the full agent loop until a final plan, the iteration cap, or an
    unrecoverable provider failure."""
    prompts = load_prompt_set(config.prompt_set)
    entries: list[ScratchpadEntry] = []
    history: list[str] = []  # raw LLM outputs, replayed as assistant turns
    observed: list[dict] = []
    seen_chunks: set[int] = set()
    plan: list[PlanStep] = []
    tool_calls = 0

    def build_messages(user_content: str) -> list[dict]:
        messages = [{"role": "system", "content": prompts["agent_system"]}]
        messages += [{"role": "assistant", "content": out} for out in history]
        messages.append({"role": "user", "content": user_content})
        return messages

    for step_index in range(config.max_iterations):
        pad = serialize_scratchpad(entries, config.scratchpad_budget)
        messages = build_messages(
            prompts["agent_user"].format(question=question, scratchpad=pad)
        )
        try:
            output = llm.complete(messages)
        except ProviderError:
            return AgentAnswer(plan=[], scratchpad=entries, termination=TERM_LLM_FAILURE)
        history.append(output)

        try:
            decision = parse_agent_decision(output)
        except DecisionParseError:
            # one reprompt with a format reminder; a second failure burns the
            # iteration as a thought-only entry
            messages = build_messages(prompts["format_reminder"])
            try:
                output = llm.complete(messages)
            except ProviderError:
                return AgentAnswer(plan=[], scratchpad=entries, termination=TERM_LLM_FAILURE)
            history.append(output)
            try:
                decision = parse_agent_decision(output)
            except DecisionParseError:
                entries.append(
                    ScratchpadEntry(
                        step_index=step_index,
                        thought=output.strip() or "(unparseable output)",
                    )
                )
                continue

        if decision.final_steps is not None:
            plan = [
                PlanStep(index=i, instruction=instr, evidence=[dict(c) for c in observed])
                for i, instr in enumerate(decision.final_steps, start=1)
            ]
            entries.append(
                ScratchpadEntry(
                    step_index=step_index,
                    thought=decision.thought or "(finalizing plan)",
                )
            )
            return AgentAnswer(plan=plan, scratchpad=entries, termination=TERM_FINISHED)

        tool_name, argument = decision.tool_call
        if tool_calls >= config.max_tool_calls:
            entries.append(
                ScratchpadEntry(
                    step_index=step_index,
                    thought=(decision.thought + "\n" if decision.thought else "")
                    + f"(tool budget of {config.max_tool_calls} calls exhausted; "
                    f"wanted {tool_name}({argument}))",
                )
            )
            continue
        try:
            call, resp = tools.call(tool_name, argument)
            observation = render_response(resp)
            for citation in _citations_from_response(resp.status == "ok", resp.payload):
                if citation["chunk_id"] not in seen_chunks:
                    seen_chunks.add(citation["chunk_id"])
                    observed.append(citation)
        except ProviderError as exc:
            # tools.call assigned the index before dispatching
            call = ToolCall(
                tool_name=tool_name, argument=argument, call_index=max(tools.call_count - 1, 0)
            )
            observation = f"tool error: {exc}"
        tool_calls += 1
        entries.append(
            ScratchpadEntry(
                step_index=step_index,
                thought=decision.thought,
                action=call,
                observation=observation,
            )
        )

    return AgentAnswer(plan=plan, scratchpad=entries, termination=TERM_ITERATION_CAP)


def transcript_dict(question: str, config: AgentConfig, answer: AgentAnswer) -> dict:
    """JSON-serializable export of one run: the debugging surface."""
    return {
        "question": question,
        "config": {
            "max_iterations": config.max_iterations,
            "max_tool_calls": config.max_tool_calls,
            "scratchpad_budget": config.scratchpad_budget,
            "prompt_set": config.prompt_set,
        },
        "scratchpad": [
            {
                "step_index": e.step_index,
                "thought": e.thought,
                "action": (
                    {
                        "tool_name": e.action.tool_name,
                        "argument": e.action.argument,
                        "call_index": e.action.call_index,
                    }
                    if e.action
                    else None
                ),
                "observation": e.observation,
            }
            for e in answer.scratchpad
        ],
        "plan": [
            {
                "index": s.index,
                "instruction": s.instruction,
                "evidence": s.evidence,
                "refined": s.refined,
            }
            for s in answer.plan
        ],
        "termination": answer.termination,
    }
