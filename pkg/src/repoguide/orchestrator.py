"""Full answer chain: contextualize -> plan -> recursive step refinement ->
integrate -> verify/enhance, over a persistent session store."""

from __future__ import annotations

import json
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from repoguide.agent import (
    TERM_FINISHED,
    AgentAnswer,
    AgentConfig,
    PlanStep,
    load_prompt_set,
    run_onboarding_agent,
    transcript_dict,
)
from repoguide.providers import ProviderError
from repoguide.tools import RetrievalTools
from repoguide.vectorstore import VectorIndex, nearest_paths

NODE_PENDING = "pending"
NODE_REFINED = "refined"
NODE_ATOMIC = "atomic"


class StageError(RuntimeError):
    """Hard failure of one pipeline stage, named so callers can triage."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage}: {message}")
        self.stage = stage


@dataclass(frozen=True)
class OrchestratorConfig:
    max_depth: int = 2
    branching_cap: int = 5
    concurrency: int = 4
    context_turns: int = 6
    agent: AgentConfig = AgentConfig()
    prompt_set: str = "default"


@dataclass
class RefinementNode:
    step: PlanStep
    depth: int
    children: list["RefinementNode"] = field(default_factory=list)
    partial_solution: str = ""
    status: str = NODE_PENDING


@dataclass
class FinalAnswer:
    markdown: str
    citations: list[dict]
    verification_report: list[dict]


# --- session store ----------------------------------------------------------


class SessionStore:
    """Append-only JSON-lines file per session; the paper-described database role."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _path(self, session_id: str) -> Path:
        if not re.fullmatch(r"[A-Za-z0-9_-]+", session_id):
            raise ValueError(f"invalid session id {session_id!r}")
        return self.directory / f"{session_id}.jsonl"

    def lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def create(self, session_id: str | None = None) -> str:
        import uuid

        session_id = session_id or uuid.uuid4().hex
        path = self._path(session_id)
        if not path.exists():
            header = {"session_id": session_id, "created_at": time.time()}
            path.write_text(json.dumps(header) + "\n", encoding="utf-8")
        return session_id

    def exists(self, session_id: str) -> bool:
        try:
            return self._path(session_id).exists()
        except ValueError:
            return False

    def turns(self, session_id: str) -> list[dict]:
        path = self._path(session_id)
        if not path.exists():
            raise KeyError(f"unknown session {session_id!r}")
        records = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line]
        return records[1:]  # first line is the header

    def append_turn(self, session_id: str, record: dict) -> int:
        path = self._path(session_id)
        if not path.exists():
            raise KeyError(f"unknown session {session_id!r}")
        with self.lock(session_id):
            turn_index = len(self.turns(session_id))
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(dict(record, turn_index=turn_index), ensure_ascii=False) + "\n")
        return turn_index


# --- chain stages -----------------------------------------------------------


def contextualize(
    turns: list[dict], question: str, llm, prompts: dict, window: int = 6
) -> tuple[str, bool, bool]:
    """Rewrite a follow-up into a standalone question.

    Returns (question, llm_was_called, fallback_used). An empty session needs
    no rewrite and costs no LLM call; a provider failure falls back to the
    raw question rather than failing the turn.
    """
    if not turns:
        return question, False, False
    history = "\n".join(
        f"user: {t['question']}\nassistant: {t.get('final_answer', '')}"
        for t in turns[-window:]
    )
    messages = [
        {"role": "system", "content": prompts["contextualize_system"]},
        {
            "role": "user",
            "content": prompts["contextualize_user"].format(history=history, question=question),
        },
    ]
    try:
        rewritten = llm.complete(messages).strip()
    except ProviderError:
        return question, True, True
    return (rewritten or question), True, False


def render_plan_text(plan: list[PlanStep]) -> str:
    return "\n".join(f"{s.index}. {s.instruction}" for s in plan)


def sub_question(instruction: str) -> str:
    return f'How exactly to perform "{instruction}" in this project?'


def _merge_excess_steps(steps: list[PlanStep], cap: int) -> list[PlanStep]:
    if len(steps) <= cap:
        return steps
    kept = steps[: cap - 1]
    merged_instr = "; ".join(s.instruction for s in steps[cap - 1 :])
    merged = PlanStep(index=cap, instruction=merged_instr, evidence=steps[cap - 1].evidence)
    return kept + [merged]


def process_steps(
    initial: AgentAnswer,
    index: VectorIndex,
    embed_provider,
    llm,
    config: OrchestratorConfig = OrchestratorConfig(),
    collect_transcripts: list | None = None,
) -> list[RefinementNode]:
    """Recursively refine every plan step with parallel sub-agent runs.

    Nodes are processed breadth-first; each level's sub-agents may run
    concurrently (bounded pool), and results attach by node identity so the
    outcome is independent of completion order. A node is atomic once its
    sub-agent returns a single-step plan or the depth cap is reached; a
    failed sub-agent degrades that node to an atomic failure note.
    """
    if initial.termination != TERM_FINISHED:
        raise ValueError("step processor requires a finished initial plan")
    roots = [RefinementNode(step=s, depth=0) for s in initial.plan]
    frontier = list(roots)

    while frontier:
        def refine(node: RefinementNode):
            question = sub_question(node.step.instruction)
            tools = RetrievalTools(index, embed_provider)
            try:
                answer = run_onboarding_agent(question, tools, llm, config.agent)
            except Exception as exc:  # graceful degradation: node keeps a note
                return node, None, f"[refinement failed: {exc}]"
            if answer.termination != TERM_FINISHED or not answer.plan:
                return node, answer, f"[refinement failed: terminated with {answer.termination}]"
            return node, answer, None

        with ThreadPoolExecutor(max_workers=max(1, config.concurrency)) as pool:
            results = list(pool.map(refine, frontier))

        next_frontier: list[RefinementNode] = []
        for node, answer, failure in results:
            node.step.refined = True
            if collect_transcripts is not None:
                collect_transcripts.append(
                    {
                        "depth": node.depth,
                        "instruction": node.step.instruction,
                        "transcript": (
                            transcript_dict(sub_question(node.step.instruction), config.agent, answer)
                            if answer is not None
                            else None
                        ),
                        "failure": failure,
                    }
                )
            if failure is not None:
                node.status = NODE_ATOMIC
                node.partial_solution = f"{failure} {node.step.instruction}"
                continue
            plan_text = render_plan_text(answer.plan)
            if len(answer.plan) == 1 or node.depth >= config.max_depth:
                node.status = NODE_ATOMIC
                node.partial_solution = plan_text
            else:
                node.status = NODE_REFINED
                node.partial_solution = plan_text
                steps = _merge_excess_steps(answer.plan, config.branching_cap)
                node.children = [RefinementNode(step=s, depth=node.depth + 1) for s in steps]
                next_frontier.extend(node.children)
        frontier = next_frontier

    return roots


def integrate(roots: list[RefinementNode]) -> str:
    """Deterministic depth-first, plan-order concatenation. No LLM involved."""
    lines: list[str] = []

    def walk(node: RefinementNode, label: str):
        level = label.count(".")
        lines.append(f"{'#' * (level + 2)} Step {label}: {node.step.instruction}")
        if node.status == NODE_ATOMIC:
            lines.append(node.partial_solution)
        for i, child in enumerate(node.children, start=1):
            walk(child, f"{label}.{i}")

    for i, root in enumerate(roots, start=1):
        walk(root, str(i))
    return "\n\n".join(lines) + "\n"


# --- verification / enhancement ---------------------------------------------

_FENCE_RE = re.compile(r"^```([^\n]*)\n(.*?)^```\s*$", re.MULTILINE | re.DOTALL)
_INLINE_CODE_RE = re.compile(r"`([^`\n]+)`")


def normalize_code(text: str) -> str:
    """Strip surrounding blank lines and collapse whitespace runs, so
    formatting noise never triggers a false mismatch."""
    return re.sub(r"\s+", " ", text.strip())


def _looks_like_path(token: str) -> bool:
    return "/" in token and re.fullmatch(r"[\w./\-]+", token) is not None


def _referenced_file(draft: str, fence_start: int, info: str, index: VectorIndex) -> str | None:
    candidates = [info.strip()] if info.strip() else []
    preceding = draft[:fence_start].splitlines()[-3:]
    for line in preceding:
        candidates.extend(_INLINE_CODE_RE.findall(line))
        candidates.extend(t for t in line.split() if _looks_like_path(t))
    for cand in candidates:
        if cand in index.paths:
            return cand
    return None


def verify_draft(draft: str, index: VectorIndex) -> list[dict]:
    """Check every fenced code block and path mention against the corpus.

    A block matches when its normalized text occurs within the referenced
    file, or within any file when unreferenced. Every entry is either
    matched or flagged; nothing unverifiable goes unflagged.
    """
    report: list[dict] = []

    for m in _FENCE_RE.finditer(draft):
        info, body = m.group(1), m.group(2)
        normalized = normalize_code(body)
        ref = _referenced_file(draft, m.start(), info, index)
        if ref is not None:
            haystacks = [index.files[index.paths[ref]].content]
        else:
            haystacks = [f.content for f in index.files.values()]
        matched = bool(normalized) and any(normalized in normalize_code(h) for h in haystacks)
        report.append(
            {
                "kind": "code_block",
                "snippet": body.strip()[:120],
                "referenced_path": ref,
                "matched": matched,
                "correction_applied": False,
            }
        )

    draft_no_fences = _FENCE_RE.sub("", draft)
    seen: set[str] = set()
    for token in _INLINE_CODE_RE.findall(draft_no_fences):
        token = token.strip()
        if token in seen or not _looks_like_path(token):
            continue
        seen.add(token)
        matched = token in index.paths
        entry = {
            "kind": "path",
            "snippet": token,
            "matched": matched,
            "correction_applied": False,
        }
        if not matched:
            entry["hints"] = nearest_paths(sorted(index.paths), token)
        report.append(entry)

    return report


def _balance_fences(markdown: str) -> str:
    fence_lines = sum(1 for line in markdown.splitlines() if line.startswith("```"))
    if fence_lines % 2 == 1:
        markdown = markdown.rstrip("\n") + "\n```\n"
    return markdown


def _true_snippets(report: list[dict], index: VectorIndex, embed_provider) -> str:
    parts = []
    for entry in report:
        if entry["matched"]:
            continue
        if entry["kind"] == "path":
            hints = entry.get("hints", [])
            parts.append(f"- path `{entry['snippet']}` not found; closest: {', '.join(hints)}")
        else:
            query = entry["snippet"].splitlines()[0] if entry["snippet"] else ""
            closest = ""
            if query:
                try:
                    hits = index.search(query, provider=embed_provider)
                    if hits:
                        closest = index.chunk_by_id[hits[0].chunk_id].text[:400]
                except Exception:
                    closest = ""
            parts.append(
                f"- code block starting {entry['snippet'][:60]!r} not found in the corpus."
                + (f" Closest indexed content:\n{closest}" if closest else "")
            )
    return "\n".join(parts)


def enhance_message(
    draft: str, index: VectorIndex, llm, embed_provider=None, prompts: dict | None = None
) -> tuple[str, list[dict], bool]:
    """Verify the draft against the codebase and let the LLM correct flagged
    mismatches. Returns (markdown, report, correction_succeeded)."""
    if not draft.strip():
        raise StageError("enhance", "empty draft answer")
    prompts = prompts or load_prompt_set()
    report = verify_draft(draft, index)
    mismatches = [e for e in report if not e["matched"]]
    if not mismatches:
        return _balance_fences(draft), report, True

    mismatch_text = _true_snippets(report, index, embed_provider)
    messages = [
        {"role": "system", "content": prompts["enhance_system"]},
        {
            "role": "user",
            "content": prompts["enhance_user"].format(draft=draft, mismatches=mismatch_text),
        },
    ]
    try:
        corrected = llm.complete(messages)
    except ProviderError:
        # no silent drop: ship the draft with explicit annotations
        annotation = "\n\n---\n**Unverified content flagged by the codebase check:**\n" + "\n".join(
            f"- {e['kind']}: {e['snippet'][:80]!r}" for e in mismatches
        ) + "\n"
        return _balance_fences(draft + annotation), report, False
    for entry in mismatches:
        entry["correction_applied"] = True
    return _balance_fences(corrected), report, True


# --- full chain --------------------------------------------------------------


class Orchestrator:
    def __init__(
        self,
        index: VectorIndex,
        embed_provider,
        llm,
        data_dir: str | Path,
        config: OrchestratorConfig = OrchestratorConfig(),
    ):
        self.index = index
        self.embed_provider = embed_provider
        self.llm = llm
        self.config = config
        self.prompts = load_prompt_set(config.prompt_set)
        self.data_dir = Path(data_dir)
        self.sessions = SessionStore(self.data_dir / "sessions")
        self.trace_dir = self.data_dir / "traces"
        self.trace_dir.mkdir(parents=True, exist_ok=True)

    def trace_path(self, session_id: str, turn_index: int) -> Path:
        return self.trace_dir / session_id / f"{turn_index}.json"

    def load_trace(self, session_id: str, turn_index: int) -> dict:
        return json.loads(self.trace_path(session_id, turn_index).read_text(encoding="utf-8"))

    def answer(self, session_id: str, question: str) -> tuple[FinalAnswer, int]:
        """Run the whole chain for one turn, persist the trace, append the turn."""
        if not self.sessions.exists(session_id):
            raise KeyError(f"unknown session {session_id!r}")
        if not question.strip():
            raise StageError("contextualize", "empty question")
        turns = self.sessions.turns(session_id)
        trace: dict = {"question": question}

        if self.index.num_chunks == 0:
            final = FinalAnswer(
                markdown=(
                    "No project context has been indexed yet. Index a repository "
                    "first, then ask again.\n"
                ),
                citations=[],
                verification_report=[],
            )
            trace.update({"empty_index": True, "final_markdown": final.markdown})
            return self._record(session_id, question, final, trace)

        try:
            ctx_question, llm_called, fallback = contextualize(
                turns, question, self.llm, self.prompts, self.config.context_turns
            )
        except Exception as exc:
            self._record_failure(session_id, question, "contextualize", exc)
            raise StageError("contextualize", str(exc)) from exc
        trace.update(
            {
                "contextualized_question": ctx_question,
                "contextualizer_called": llm_called,
                "contextualizer_fallback": fallback,
            }
        )

        try:
            tools = RetrievalTools(self.index, self.embed_provider)
            initial = run_onboarding_agent(ctx_question, tools, self.llm, self.config.agent)
            if initial.termination != TERM_FINISHED:
                raise StageError(
                    "onboarding_agent", f"agent terminated with {initial.termination}"
                )
        except StageError as exc:
            self._record_failure(session_id, question, exc.stage, exc)
            raise
        except Exception as exc:
            self._record_failure(session_id, question, "onboarding_agent", exc)
            raise StageError("onboarding_agent", str(exc)) from exc
        trace["initial_transcript"] = transcript_dict(ctx_question, self.config.agent, initial)

        sub_transcripts: list = []
        try:
            roots = process_steps(
                initial,
                self.index,
                self.embed_provider,
                self.llm,
                self.config,
                collect_transcripts=sub_transcripts,
            )
        except Exception as exc:
            self._record_failure(session_id, question, "step_processor", exc)
            raise StageError("step_processor", str(exc)) from exc
        trace["refinement_tree"] = [node_dict(r) for r in roots]
        trace["sub_agent_runs"] = sub_transcripts

        try:
            draft = integrate(roots)
        except Exception as exc:
            self._record_failure(session_id, question, "integrate", exc)
            raise StageError("integrate", str(exc)) from exc
        trace["draft"] = draft

        try:
            markdown, report, corrected = enhance_message(
                draft, self.index, self.llm, self.embed_provider, self.prompts
            )
        except StageError as exc:
            self._record_failure(session_id, question, exc.stage, exc)
            raise
        except Exception as exc:
            self._record_failure(session_id, question, "enhance", exc)
            raise StageError("enhance", str(exc)) from exc

        citations = collect_citations(initial, sub_transcripts)
        final = FinalAnswer(markdown=markdown, citations=citations, verification_report=report)
        trace.update(
            {
                "verification_report": report,
                "correction_succeeded": corrected,
                "final_markdown": markdown,
                "citations": citations,
            }
        )
        return self._record(session_id, question, final, trace)

    def _record(
        self, session_id: str, question: str, final: FinalAnswer, trace: dict
    ) -> tuple[FinalAnswer, int]:
        with self.sessions.lock(session_id):
            turn_index = len(self.sessions.turns(session_id))
            path = self.trace_path(session_id, turn_index)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(
                json.dumps(trace, indent=2, ensure_ascii=False, sort_keys=True), encoding="utf-8"
            )
            record = {
                "question": question,
                "final_answer": final.markdown,
                "trace_ref": str(path.relative_to(self.data_dir)),
                "ts": time.time(),
                "turn_index": turn_index,
            }
            with open(self.sessions._path(session_id), "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        return final, turn_index

    def _record_failure(self, session_id: str, question: str, stage: str, exc: Exception) -> None:
        with self.sessions.lock(session_id):
            turn_index = len(self.sessions.turns(session_id))
            record = {
                "question": question,
                "final_answer": "",
                "error_stage": stage,
                "error": str(exc),
                "trace_ref": None,
                "ts": time.time(),
                "turn_index": turn_index,
            }
            with open(self.sessions._path(session_id), "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def node_dict(node: RefinementNode) -> dict:
    return {
        "instruction": node.step.instruction,
        "depth": node.depth,
        "status": node.status,
        "partial_solution": node.partial_solution,
        "children": [node_dict(c) for c in node.children],
    }


def collect_citations(initial: AgentAnswer, sub_transcripts: list[dict]) -> list[dict]:
    """Union of evidence across the initial run and every sub-agent run,
    deduplicated by (source_url, repo_path), in first-seen order."""
    seen: set[tuple[str, str]] = set()
    citations: list[dict] = []

    def add(evidence: list[dict]):
        for e in evidence:
            key = (e["source_url"], e["repo_path"])
            if key not in seen:
                seen.add(key)
                citations.append({"source_url": e["source_url"], "repo_path": e["repo_path"]})

    for step in initial.plan:
        add(step.evidence)
    for run in sub_transcripts:
        transcript = run.get("transcript")
        if transcript:
            for step in transcript["plan"]:
                add(step["evidence"])
    return citations
