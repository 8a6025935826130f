"""Agent-facing retrieval tools over the index.

Two cooperating tools: cheap snippet search with fallback feedback on empty
or repeated queries, and expensive whole-file retrieval. State (query log,
call counter) is confined to one agent run.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from repoguide.vectorstore import SearchParams, UnknownFileError, VectorIndex

SNIPPET_TOOL = "retrieve_relevant_code_snippets"
FILE_TOOL = "retrieve_missing_files"
TOOL_NAMES = (SNIPPET_TOOL, FILE_TOOL)

STATUS_OK = "ok"
STATUS_EMPTY = "empty_with_feedback"
STATUS_REPEATED = "repeated_query"
STATUS_NOT_FOUND = "not_found_with_hint"

COST_CHEAP = "cheap"
COST_EXPENSIVE = "expensive"

_PUNCT_EDGES = re.compile(r"^[\W_]+|[\W_]+$")


@dataclass(frozen=True)
class ToolCall:
    tool_name: str
    argument: str
    call_index: int


@dataclass(frozen=True)
class ToolResponse:
    status: str
    payload: object  # list of SearchHit dicts, or {"repo_path", "source_url", "content"}
    feedback: str
    cost: str


@dataclass
class QueryLog:
    """Ordered normalized snippet queries with outcomes, for one agent run."""

    entries: list[tuple[str, str]] = field(default_factory=list)

    def find(self, normalized: str) -> int:
        for i, (q, _status) in enumerate(self.entries):
            if q == normalized:
                return i
        return -1

    def record(self, normalized: str, status: str) -> None:
        self.entries.append((normalized, status))


def normalize_query(query: str) -> str:
    collapsed = " ".join(query.lower().split())
    return _PUNCT_EDGES.sub("", collapsed)


class RetrievalTools:
    """Per-run tool surface. The index itself is immutable and shared."""

    def __init__(self, index: VectorIndex, embed_provider, params: SearchParams = SearchParams()):
        self.index = index
        self.embed_provider = embed_provider
        self.params = params
        self.query_log = QueryLog()
        self.search_count = 0
        self.call_count = 0

    def call(self, tool_name: str, argument: str) -> tuple[ToolCall, ToolResponse]:
        if tool_name not in TOOL_NAMES:
            raise ValueError(f"unknown tool {tool_name!r}")
        call = ToolCall(tool_name=tool_name, argument=argument, call_index=self.call_count)
        self.call_count += 1
        if tool_name == SNIPPET_TOOL:
            return call, self.retrieve_relevant_code_snippets(argument)
        return call, self.retrieve_missing_files(argument)

    def retrieve_relevant_code_snippets(self, query: str) -> ToolResponse:
        normalized = normalize_query(query)
        prior = self.query_log.find(normalized)
        if prior >= 0:
            feedback = (
                f"This query was already issued as snippet search #{prior + 1} "
                f"(outcome: {self.query_log.entries[prior][1]}). Reformulate the "
                "query with different or more specific terms instead of repeating it."
            )
            self.query_log.record(normalized, STATUS_REPEATED)
            return ToolResponse(STATUS_REPEATED, [], feedback, COST_CHEAP)

        self.search_count += 1
        hits = self.index.search(query, self.params, provider=self.embed_provider)
        if not hits:
            terms = ", ".join(normalized.split()) or "(no terms)"
            feedback = (
                f"No indexed chunk scored above {self.params.threshold} for the "
                f"terms [{terms}]. Try broader wording, synonyms, or names that "
                "actually appear in the codebase."
            )
            self.query_log.record(normalized, STATUS_EMPTY)
            return ToolResponse(STATUS_EMPTY, [], feedback, COST_CHEAP)

        self.query_log.record(normalized, STATUS_OK)
        payload = [
            {
                "chunk_id": h.chunk_id,
                "score": round(h.score, 6),
                "source_url": h.metadata["source_url"],
                "repo_path": h.metadata["repo_path"],
                "char_start": h.metadata["char_start"],
                "char_end": h.metadata["char_end"],
                "text": self.index.chunk_by_id[h.chunk_id].text,
            }
            for h in hits
        ]
        return ToolResponse(STATUS_OK, payload, "", COST_CHEAP)

    def retrieve_missing_files(self, selector: str) -> ToolResponse:
        try:
            file, _chunks, content = self.index.get_file_chunks(selector)
        except UnknownFileError as exc:
            feedback = f"No file matches {selector!r}."
            if exc.hints:
                feedback += " Closest indexed paths: " + ", ".join(exc.hints) + "."
            return ToolResponse(STATUS_NOT_FOUND, [], feedback, COST_EXPENSIVE)
        payload = {
            "file_id": file.file_id,
            "repo_path": file.repo_path,
            "source_url": file.source_url,
            "content": content,
        }
        return ToolResponse(STATUS_OK, payload, "", COST_EXPENSIVE)


def render_response(resp: ToolResponse) -> str:
    """Deterministic text an agent sees as the observation for a tool call."""
    lines = [f"status={resp.status} cost={resp.cost}"]
    if resp.feedback:
        lines.append(f"feedback: {resp.feedback}")
    if resp.status == STATUS_OK:
        if isinstance(resp.payload, dict):
            lines.append(f"file {resp.payload['repo_path']} ({resp.payload['source_url']}):")
            lines.append(resp.payload["content"])
        else:
            for hit in resp.payload:
                lines.append(
                    f"[chunk {hit['chunk_id']} score={hit['score']:.4f} "
                    f"{hit['repo_path']}#{hit['char_start']}-{hit['char_end']} "
                    f"({hit['source_url']})]"
                )
                lines.append(hit["text"])
    return "\n".join(lines)
