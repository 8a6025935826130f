"""Repository scanning and sliding-window character chunking."""

from __future__ import annotations

import fnmatch
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

logger = logging.getLogger(__name__)

DOC_SUFFIXES = {".md", ".markdown", ".rst", ".txt", ".adoc"}

DEFAULT_EXCLUDES = (".git/*", ".git", "*/.git/*")


@dataclass(frozen=True)
class IngestConfig:
    """Chunking parameters. Windows are measured in Unicode characters, not bytes."""

    chunk_size: int = 2000
    overlap: int = 200
    include_globs: tuple[str, ...] = ("*",)
    exclude_globs: tuple[str, ...] = ()

    def __post_init__(self):
        if self.chunk_size <= 0:
            raise ValueError("chunk_size must be positive")
        if not 0 <= self.overlap < self.chunk_size:
            raise ValueError("overlap must be non-negative and smaller than chunk_size")


@dataclass(frozen=True)
class SourceFile:
    file_id: int
    repo_path: str
    source_url: str
    content: str
    kind: str  # "code" or "documentation"


@dataclass(frozen=True)
class Chunk:
    chunk_id: int
    file_id: int
    char_start: int
    char_end: int  # exclusive
    text: str
    metadata: dict = field(default_factory=dict)


def _is_binary(raw: bytes) -> bool:
    """NUL byte in the first 8 KiB, or undecodable as UTF-8."""
    if b"\x00" in raw[:8192]:
        return True
    try:
        raw.decode("utf-8")
    except UnicodeDecodeError:
        return True
    return False


def _included(rel_path: str, config: IngestConfig) -> bool:
    for pattern in DEFAULT_EXCLUDES + tuple(config.exclude_globs):
        if fnmatch.fnmatch(rel_path, pattern):
            return False
    return any(fnmatch.fnmatch(rel_path, pattern) for pattern in config.include_globs)


def classify_kind(rel_path: str) -> str:
    return "documentation" if Path(rel_path).suffix.lower() in DOC_SUFFIXES else "code"


def scan_repository(
    root: str | Path,
    config: IngestConfig | None = None,
    source_url_base: str | None = None,
) -> list[SourceFile]:
    """Collect every included text file under ``root``.

    File ids are assigned densely from 0 in lexicographic path order, so two
    scans of the same tree yield identical results. Binary files are skipped
    with a warning. ``source_url_base`` overrides the default "local://"
    scheme used for repositories without a known remote origin.
    """
    config = config or IngestConfig()
    root = Path(root)
    if not root.is_dir():
        raise NotADirectoryError(f"repository root {root} does not exist or is not a directory")

    rel_paths = sorted(
        p.relative_to(root).as_posix() for p in root.rglob("*") if p.is_file()
    )

    files: list[SourceFile] = []
    for rel_path in rel_paths:
        if not _included(rel_path, config):
            continue
        raw = (root / rel_path).read_bytes()
        if _is_binary(raw):
            logger.warning("skipping binary or undecodable file: %s", rel_path)
            continue
        if source_url_base:
            source_url = source_url_base.rstrip("/") + "/" + rel_path
        else:
            source_url = "local://" + rel_path
        files.append(
            SourceFile(
                file_id=len(files),
                repo_path=rel_path,
                source_url=source_url,
                content=raw.decode("utf-8"),
                kind=classify_kind(rel_path),
            )
        )
    return files


def chunk_file(
    file: SourceFile, config: IngestConfig | None = None, first_chunk_id: int = 0
) -> list[Chunk]:
    """Split one file into overlapping windows of ``chunk_size`` characters.

    Stride is chunk_size - overlap; the last window is truncated at end of
    file and a window that would start at or past the end is not emitted.
    Empty files produce no chunks.
    """
    config = config or IngestConfig()
    stride = config.chunk_size - config.overlap
    content = file.content
    metadata = {
        "source_url": file.source_url,
        "repo_path": file.repo_path,
        "file_id": file.file_id,
    }
    chunks: list[Chunk] = []
    start = 0
    while start < len(content):
        end = min(start + config.chunk_size, len(content))
        chunks.append(
            Chunk(
                chunk_id=first_chunk_id + len(chunks),
                file_id=file.file_id,
                char_start=start,
                char_end=end,
                text=content[start:end],
                metadata=dict(metadata),
            )
        )
        if end == len(content):
            break
        start += stride
    return chunks


def chunk_corpus(files: list[SourceFile], config: IngestConfig | None = None) -> list[Chunk]:
    """Chunk every file, assigning chunk ids densely across the whole corpus."""
    chunks: list[Chunk] = []
    for file in files:
        chunks.extend(chunk_file(file, config, first_chunk_id=len(chunks)))
    return chunks


def write_manifest(chunks: list[Chunk], path: str | Path) -> None:
    """One JSON line per chunk; text lives in the content store, not here."""
    with open(path, "w", encoding="utf-8") as fh:
        for chunk in chunks:
            fh.write(
                json.dumps(
                    {
                        "chunk_id": chunk.chunk_id,
                        "file_id": chunk.file_id,
                        "repo_path": chunk.metadata["repo_path"],
                        "source_url": chunk.metadata["source_url"],
                        "char_start": chunk.char_start,
                        "char_end": chunk.char_end,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def read_manifest(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
