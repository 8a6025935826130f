"""Acceptance suite: one test per release criterion, each printing a pass line
and enforcing its runtime budget. Runs fully offline against mock providers."""

import json
import random
import string
import time

import numpy as np
import pytest

from repoguide.agent import (
    TERM_FINISHED,
    TERM_ITERATION_CAP,
    AgentConfig,
    run_onboarding_agent,
)
from repoguide.ingest import IngestConfig, SourceFile, chunk_corpus, chunk_file
from repoguide.orchestrator import Orchestrator, OrchestratorConfig, verify_draft
from repoguide.providers import MockChatProvider, MockEmbeddingProvider
from repoguide.tools import STATUS_EMPTY, RetrievalTools, normalize_query
from repoguide.vectorstore import Chunk, SearchParams, VectorIndex

from conftest import GOLDEN_ANSWER


def report(name: str, elapsed: float, budget: float):
    print(f"PASS {name} ({elapsed:.2f}s < {budget:.0f}s budget)")
    assert elapsed < budget


MULTIBYTE = "aé彩🌍\nb \t"


def random_text(rng: random.Random, length: int) -> str:
    alphabet = string.ascii_letters + string.digits + MULTIBYTE
    return "".join(rng.choice(alphabet) for _ in range(length))


def test_chunker_conformance():
    """200+ random files (0..10000 chars, multi-byte included), parameters
    2000/200: coverage, overlap, reconstruction, determinism."""
    start = time.monotonic()
    rng = random.Random(2024)
    config = IngestConfig(chunk_size=2000, overlap=200)
    for i in range(220):
        length = rng.choice([0, 1, 199, 200, 1999, 2000, 2001]) if i < 30 else rng.randint(0, 10000)
        content = random_text(rng, length)
        file = SourceFile(i, f"f{i}.txt", f"local://f{i}.txt", content, "code")
        chunks = chunk_file(file, config)
        assert chunks == chunk_file(file, config)  # determinism
        covered = 0
        for c in chunks:
            assert 0 <= c.char_start < c.char_end <= len(content)
            assert len(c.text) <= 2000
            assert c.text == content[c.char_start : c.char_end]
            covered = max(covered, c.char_end)
        if content:
            assert covered == len(content)
            assert chunks[0].char_start == 0
        else:
            assert chunks == []
        for prev, nxt in zip(chunks, chunks[1:]):
            if nxt is not chunks[-1] or nxt.char_end - nxt.char_start == 2000:
                assert prev.char_end - nxt.char_start == 200
            else:
                assert 0 <= prev.char_end - nxt.char_start < 2000
        rebuilt = ""
        for c in chunks:
            rebuilt += c.text[len(rebuilt) - c.char_start :]
        assert rebuilt == content  # reconstruction exact, 100% of files
    report("chunker-conformance", time.monotonic() - start, 10)


def test_search_oracle_equivalence():
    """100 random indexes (<=1000 vectors, dims 8..64), 50 queries each:
    membership, order, scores within 1e-6, threshold and top-5 bounds."""
    start = time.monotonic()
    rng = np.random.default_rng(99)
    params = SearchParams(k=5, threshold=0.1)
    for _ in range(100):
        n = int(rng.integers(1, 1001))
        dim = int(rng.integers(8, 65))
        raw = rng.standard_normal((n, dim))
        files = [SourceFile(0, "f.txt", "local://f.txt", "x" * n, "code")]
        chunks = [
            Chunk(i, 0, i, i + 1, "x",
                  metadata={"source_url": "local://f.txt", "repo_path": "f.txt", "file_id": 0})
            for i in range(n)
        ]
        normalized = raw / np.linalg.norm(raw, axis=1, keepdims=True)
        index = VectorIndex(files, chunks, normalized)
        for _q in range(50):
            query = rng.standard_normal(dim)
            hits = index.search_vector(query, params)
            # brute-force oracle: python loop over every vector
            qn = query / np.linalg.norm(query)
            scored = []
            for cid in range(n):
                s = min(1.0, max(0.0, float(np.dot(normalized[cid], qn))))
                if s > 0.1:
                    scored.append((cid, s))
            scored.sort(key=lambda t: (-t[1], t[0]))
            expected = scored[:5]
            assert [h.chunk_id for h in hits] == [cid for cid, _ in expected]
            for h, (_, s) in zip(hits, expected):
                assert abs(h.score - s) < 1e-6
            assert len(hits) <= 5
            assert all(h.score > 0.1 for h in hits)
    report("search-oracle-equivalence", time.monotonic() - start, 30)


def test_fallback_semantics():
    """Zero-result queries return empty_with_feedback with non-empty feedback;
    index-search count equals the distinct normalized query count per run."""
    start = time.monotonic()
    rng = random.Random(5)
    # scripted orthogonal corpus: queries can be forced to miss
    dim = 8
    basis = np.eye(dim)
    texts = [f"doc {i}" for i in range(4)]
    vectors = {}
    miss_queries = [f"miss {i}" for i in range(40)]
    for i, t in enumerate(texts):
        for variant in (t, t.upper(), f"  {t} "):
            vectors[variant] = basis[i].tolist()
    for i, q in enumerate(miss_queries):
        for variant in (q, q.upper(), f"  {q} "):
            vectors[variant] = basis[(i % (dim - 4)) + 4].tolist()
    provider = MockEmbeddingProvider(dimension=dim, vectors=vectors)
    files = [SourceFile(0, "f.txt", "local://f.txt", "".join(texts), "code")]
    chunks = [
        Chunk(i, 0, i, i + 1, texts[i],
              metadata={"source_url": "local://f.txt", "repo_path": "f.txt", "file_id": 0})
        for i in range(4)
    ]
    index = VectorIndex.build(files, chunks, provider)

    for _run in range(50):
        tools = RetrievalTools(index, provider)
        issued = []
        for _ in range(rng.randint(1, 12)):
            base = rng.choice(miss_queries + texts)
            query = base.upper() if rng.random() < 0.3 else f"  {base} "
            resp = tools.retrieve_relevant_code_snippets(query)
            issued.append(normalize_query(query))
            if base in miss_queries and issued.count(normalize_query(query)) == 1:
                assert resp.status == STATUS_EMPTY
                assert resp.feedback
        assert tools.search_count == len(set(issued))
    report("fallback-semantics", time.monotonic() - start, 5)


def test_agent_loop_invariants(fixture_index, embed_provider):
    """Adversarial scripts: trace completeness, bounded work, correct terminal state."""
    start = time.monotonic()
    config = AgentConfig(max_iterations=6, max_tool_calls=4)
    adversaries = {
        "never_finalizing": [
            {"respond": "More digging.\nACTION: retrieve_relevant_code_snippets(payment charge)"},
        ],
        "malformed_output": [{"respond": "I refuse to follow any format."}],
        "repeated_query": [
            {"turn": 0, "respond": "ACTION: retrieve_relevant_code_snippets(payment charge)"},
            {"turn": 1, "respond": "ACTION: retrieve_relevant_code_snippets(PAYMENT   charge!)"},
            {"turn": 2, "respond": "ACTION: retrieve_relevant_code_snippets(payment charge)"},
            {"respond": "FINAL:\n1. Stop repeating."},
        ],
        "mixed_malformed_then_tool": [
            {"turn": 0, "respond": "garbage with no marker"},
            {"turn": 1, "respond": "still garbage"},
            {"turn": 2, "respond": "ACTION: retrieve_missing_files(src/payment.py)"},
            {"respond": "FINAL:\n1. Done."},
        ],
    }
    for name, rules in adversaries.items():
        tools = RetrievalTools(fixture_index, embed_provider)
        answer = run_onboarding_agent("How does payment work?", tools, MockChatProvider(rules), config)
        with_action = [e for e in answer.scratchpad if e.action is not None]
        with_obs = [e for e in answer.scratchpad if e.observation is not None]
        assert len(with_action) == len(with_obs) == tools.call_count, name
        assert len(answer.scratchpad) <= config.max_iterations, name
        assert tools.call_count <= config.max_tool_calls, name
        if name in ("never_finalizing", "malformed_output"):
            assert answer.termination == TERM_ITERATION_CAP, name
            assert len(answer.scratchpad) == config.max_iterations, name
        else:
            assert answer.termination == TERM_FINISHED, name
            assert answer.plan, name
        if name == "repeated_query":
            assert tools.search_count == 1
    report("agent-loop-invariants", time.monotonic() - start, 10)


def test_chain_determinism_and_schedule_independence(
    fixture_index, embed_provider, chat_provider, tmp_path
):
    """20 runs and concurrency limits {1,2,4} all yield byte-identical markdown."""
    start = time.monotonic()
    golden = GOLDEN_ANSWER.read_text(encoding="utf-8")
    outputs = []
    run = 0
    for concurrency in (1, 2, 4):
        orch = Orchestrator(
            fixture_index,
            embed_provider,
            chat_provider,
            tmp_path / f"data{concurrency}",
            OrchestratorConfig(concurrency=concurrency),
        )
        repeats = 20 if concurrency == 4 else 3
        for _ in range(repeats):
            sid = orch.sessions.create(f"run{run}")
            run += 1
            final, _ = orch.answer(sid, "How do I add a new payment option?")
            outputs.append(final.markdown)
    assert all(o == golden for o in outputs)
    report("chain-determinism", time.monotonic() - start, 60)


def test_verification_soundness(fixture_index, fixture_files):
    """Draft with 5 verbatim and 5 corrupted snippets: exactly 5 matched, 5 flagged."""
    start = time.monotonic()
    verbatim = []
    for f in fixture_files:
        for i in range(0, len(f.content.splitlines()) - 1, 3):
            verbatim.append("\n".join(f.content.splitlines()[i : i + 2]))
    verbatim = [v for v in verbatim if v.strip()][:5]
    assert len(verbatim) == 5
    corrupted = [v.replace(v.split()[0], "zz_corrupted_zz", 1) for v in verbatim]
    blocks = [f"```\n{v}\n```" for v in verbatim] + [f"```\n{c}\n```" for c in corrupted]
    draft = "\n\n".join(blocks) + "\n"
    report_entries = [e for e in verify_draft(draft, fixture_index) if e["kind"] == "code_block"]
    assert len(report_entries) == 10
    assert sum(1 for e in report_entries if e["matched"]) == 5
    assert sum(1 for e in report_entries if not e["matched"]) == 5
    report("verification-soundness", time.monotonic() - start, 10)


def test_cli_service_parity(fixture_index, tmp_path):
    """Identical question/scripts via CLI and HTTP produce byte-identical markdown."""
    start = time.monotonic()
    from click.testing import CliRunner
    from fastapi.testclient import TestClient

    from repoguide.cli import main
    from repoguide.config import AppConfig, ProviderConfig
    from repoguide.service import create_app
    from conftest import CHAT_SCRIPT, EMBEDDING_SCRIPT, FIXTURE_REPO, write_config_file

    config_path = write_config_file(tmp_path, tmp_path / "cli-data")
    runner = CliRunner()
    assert runner.invoke(main, ["index", str(FIXTURE_REPO), "--config", str(config_path)]).exit_code == 0
    cli_result = runner.invoke(
        main, ["ask", "How do I add a new payment option?", "--config", str(config_path)]
    )
    assert cli_result.exit_code == 0

    config = AppConfig(
        data_dir=tmp_path / "srv-data",
        embedding=ProviderConfig(script=str(EMBEDDING_SCRIPT)),
        llm=ProviderConfig(script=str(CHAT_SCRIPT)),
    )
    client = TestClient(create_app(config, index=fixture_index))
    sid = client.post("/sessions").json()["session_id"]
    resp = client.post(
        f"/sessions/{sid}/ask", json={"question": "How do I add a new payment option?"}
    )
    assert resp.status_code == 200
    assert cli_result.stdout == resp.json()["final_answer"]
    assert cli_result.stdout == GOLDEN_ANSWER.read_text(encoding="utf-8")
    report("cli-service-parity", time.monotonic() - start, 30)
