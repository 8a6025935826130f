"""Command-line shell: index a repository, ask one-shot questions, run the service.

Exit codes are stable per failure point so scripts can triage:
  0 ok, 1 generic failure, 2 missing index,
  3 contextualize, 4 onboarding agent, 5 step processor, 6 integrate, 7 enhance.
"""

from __future__ import annotations

import json
import shutil
import sys
from pathlib import Path

import click

from repoguide.config import AppConfig, load_config
from repoguide.ingest import chunk_corpus, scan_repository
from repoguide.orchestrator import Orchestrator, StageError
from repoguide.vectorstore import VectorIndex

EXIT_GENERIC = 1
EXIT_NO_INDEX = 2
STAGE_EXIT_CODES = {
    "contextualize": 3,
    "onboarding_agent": 4,
    "step_processor": 5,
    "integrate": 6,
    "enhance": 7,
}


def _load_app_config(config_path: str | None) -> AppConfig:
    return load_config(config_path) if config_path else AppConfig()


def _open_index(config: AppConfig) -> VectorIndex:
    if not (config.index_dir / "meta.json").exists():
        click.echo(
            f"no index found in {config.index_dir}; run `repoguide index <repo>` first",
            err=True,
        )
        sys.exit(EXIT_NO_INDEX)
    return VectorIndex.load(config.index_dir)


@click.group()
def main():
    """Repository onboarding assistant."""


@main.command("index")
@click.argument("repo_path", type=click.Path(exists=True, file_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def cli_index(repo_path: str, config_path: str | None):
    """Scan, chunk, and embed a repository into the on-disk index."""
    config = _load_app_config(config_path)
    files = scan_repository(repo_path, config.ingest, config.source_url_base)
    chunks = chunk_corpus(files, config.ingest)
    if not chunks:
        click.echo("warning: no chunks produced (empty or all-binary repository)", err=True)
    try:
        index = VectorIndex.build(files, chunks, config.embedding_provider())
        config.index_dir.mkdir(parents=True, exist_ok=True)
        index.save(config.index_dir)
    except Exception as exc:
        # never leave half-written index artifacts behind
        shutil.rmtree(config.index_dir, ignore_errors=True)
        click.echo(f"indexing failed: {exc}", err=True)
        sys.exit(EXIT_GENERIC)
    click.echo(f"files: {index.num_files}")
    click.echo(f"chunks: {index.num_chunks}")


@main.command("ask")
@click.argument("question")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--session", "session_id", default=None, help="Reuse an existing session.")
@click.option("--trace", "trace_out", type=click.Path(), default=None,
              help="Also write the full chain trace JSON to this path.")
def cli_ask(question: str, config_path: str | None, session_id: str | None, trace_out: str | None):
    """Ask one question; prints the final markdown answer."""
    config = _load_app_config(config_path)
    index = _open_index(config)
    orch = Orchestrator(
        index,
        config.embedding_provider(),
        config.chat_provider(),
        config.data_dir,
        config.orchestrator_config(),
    )
    if session_id is None:
        session_id = orch.sessions.create()
    elif not orch.sessions.exists(session_id):
        orch.sessions.create(session_id)
    try:
        final, turn_index = orch.answer(session_id, question)
    except StageError as exc:
        click.echo(str(exc), err=True)
        sys.exit(STAGE_EXIT_CODES.get(exc.stage, EXIT_GENERIC))
    click.echo(final.markdown, nl=False)
    if trace_out:
        trace = orch.load_trace(session_id, turn_index)
        Path(trace_out).write_text(
            json.dumps(trace, indent=2, ensure_ascii=False, sort_keys=True), encoding="utf-8"
        )


@main.command("serve")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def cli_serve(config_path: str | None):
    """Run the HTTP service for the chat UI."""
    import uvicorn

    from repoguide.service import create_app

    config = _load_app_config(config_path)
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port)


if __name__ == "__main__":
    main()
