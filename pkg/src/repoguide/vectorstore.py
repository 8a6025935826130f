"""Flat in-memory dense-vector index with threshold-filtered top-k search.

The index is exhaustive (no approximate structures): at repository scale a
full scan is exact and fast, and exactness lets tests compare against a
brute-force oracle.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from repoguide.ingest import Chunk, SourceFile, read_manifest, write_manifest


class DimensionMismatchError(ValueError):
    pass


class UnknownFileError(KeyError):
    """File selector resolved to nothing; carries nearest-path hints."""

    def __init__(self, selector, hints: list[str]):
        super().__init__(selector)
        self.selector = selector
        self.hints = hints

    def __str__(self):
        msg = f"no indexed file matches {self.selector!r}"
        if self.hints:
            msg += "; closest paths: " + ", ".join(self.hints)
        return msg


@dataclass(frozen=True)
class SearchParams:
    k: int = 5
    threshold: float = 0.1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")


@dataclass(frozen=True)
class SearchHit:
    chunk_id: int
    score: float
    metadata: dict


def normalize(vector) -> np.ndarray:
    v = np.asarray(vector, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise ValueError("embedding vector contains NaN or Inf")
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return v / norm


def score(a, b) -> float:
    """Clamped cosine similarity: 0 means unrelated, 1 means exact match."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape} vs {b.shape}")
    denom = np.linalg.norm(a) * np.linalg.norm(b)
    if denom == 0.0:
        raise ValueError("cannot score a zero vector")
    return float(min(1.0, max(0.0, float(np.dot(a, b)) / denom)))


def embed_batch(texts: list[str], provider) -> np.ndarray:
    """Embed texts in input order and L2-normalize each vector on receipt."""
    if not texts:
        raise ValueError("texts must be non-empty")
    raw = provider.embed(list(texts))
    if len(raw) != len(texts):
        raise ValueError("provider returned wrong number of vectors")
    dims = {len(v) for v in raw}
    if len(dims) != 1:
        raise DimensionMismatchError(f"provider returned mixed dimensions: {sorted(dims)}")
    return np.stack([normalize(v) for v in raw])


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def nearest_paths(paths: list[str], query: str, n: int = 3) -> list[str]:
    ranked = sorted(paths, key=lambda p: (levenshtein(p, query), p))
    return ranked[:n]


class VectorIndex:
    """Immutable after build: single-writer construction, any number of readers."""

    def __init__(
        self,
        files: list[SourceFile],
        chunks: list[Chunk],
        vectors: np.ndarray,
        embedding_model: str = "",
    ):
        if len(chunks) != len(vectors):
            raise ValueError("one vector per chunk required")
        self.files = {f.file_id: f for f in files}
        self.paths = {f.repo_path: f.file_id for f in files}
        self.chunks = sorted(chunks, key=lambda c: c.chunk_id)
        self.vectors = np.asarray(vectors, dtype=np.float64)
        self.embedding_model = embedding_model
        self.chunk_by_id = {c.chunk_id: c for c in self.chunks}
        self._by_file: dict[int, list[Chunk]] = {}
        for chunk in self.chunks:
            self._by_file.setdefault(chunk.file_id, []).append(chunk)
        for file_chunks in self._by_file.values():
            file_chunks.sort(key=lambda c: c.char_start)

    @classmethod
    def build(cls, files: list[SourceFile], chunks: list[Chunk], provider) -> "VectorIndex":
        if chunks:
            vectors = embed_batch([c.text for c in chunks], provider)
        else:
            vectors = np.zeros((0, 0))
        return cls(files, chunks, vectors, embedding_model=getattr(provider, "model", ""))

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1] if self.vectors.size else 0

    @property
    def num_chunks(self) -> int:
        return len(self.chunks)

    @property
    def num_files(self) -> int:
        return len(self.files)

    def search_vector(self, query_vector, params: SearchParams = SearchParams()) -> list[SearchHit]:
        if self.num_chunks == 0:
            return []
        q = normalize(query_vector)
        if q.shape[0] != self.dimension:
            raise DimensionMismatchError(
                f"query dimension {q.shape[0]} != index dimension {self.dimension}"
            )
        scores = np.clip(self.vectors @ q, 0.0, 1.0)
        hits = [
            SearchHit(chunk_id=c.chunk_id, score=float(s), metadata=self._hit_metadata(c))
            for c, s in zip(self.chunks, scores)
            if s > params.threshold
        ]
        hits.sort(key=lambda h: (-h.score, h.chunk_id))
        return hits[: params.k]

    def search(self, query_text: str, params: SearchParams = SearchParams(), provider=None) -> list[SearchHit]:
        if self.num_chunks == 0:
            return []
        qv = embed_batch([query_text], provider)[0]
        return self.search_vector(qv, params)

    def _hit_metadata(self, chunk: Chunk) -> dict:
        return {
            "source_url": chunk.metadata["source_url"],
            "repo_path": chunk.metadata["repo_path"],
            "file_id": chunk.file_id,
            "char_start": chunk.char_start,
            "char_end": chunk.char_end,
        }

    def resolve_file(self, selector) -> int:
        """Map a file_id, exact repo path, or unique path suffix to a file_id."""
        if isinstance(selector, int) or (isinstance(selector, str) and selector.isdigit()):
            file_id = int(selector)
            if file_id in self.files:
                return file_id
            raise UnknownFileError(selector, nearest_paths(sorted(self.paths), str(selector)))
        if selector in self.paths:
            return self.paths[selector]
        suffix_matches = [
            p for p in self.paths if p == selector or p.endswith("/" + selector.lstrip("/"))
        ]
        if len(suffix_matches) == 1:
            return self.paths[suffix_matches[0]]
        hints = sorted(suffix_matches)[:3] or nearest_paths(sorted(self.paths), selector)
        raise UnknownFileError(selector, hints)

    def get_file_chunks(self, selector) -> tuple[SourceFile, list[Chunk], str]:
        """All chunks of one file in char_start order plus the reconstructed text."""
        file = self.files[self.resolve_file(selector)]
        chunks = self._by_file.get(file.file_id, [])
        text = ""
        for chunk in chunks:
            # Adjacent chunks overlap; keep only the unseen tail of each.
            text += chunk.text[len(text) - chunk.char_start :]
        if chunks and text != file.content:
            raise AssertionError(f"chunk reconstruction mismatch for {file.repo_path}")
        return file, chunks, file.content

    # --- persistence -------------------------------------------------------

    def save(self, directory: str | Path) -> None:
        directory = Path(directory)
        (directory / "content").mkdir(parents=True, exist_ok=True)
        write_manifest(self.chunks, directory / "manifest.jsonl")
        np.save(directory / "vectors.npy", self.vectors)
        files_meta = [
            {
                "file_id": f.file_id,
                "repo_path": f.repo_path,
                "source_url": f.source_url,
                "kind": f.kind,
            }
            for f in sorted(self.files.values(), key=lambda f: f.file_id)
        ]
        (directory / "files.json").write_text(
            json.dumps(files_meta, indent=2, ensure_ascii=False), encoding="utf-8"
        )
        (directory / "meta.json").write_text(
            json.dumps(
                {
                    "dimension": self.dimension,
                    "embedding_model": self.embedding_model,
                    "num_files": self.num_files,
                    "num_chunks": self.num_chunks,
                },
                indent=2,
            ),
            encoding="utf-8",
        )
        for f in self.files.values():
            (directory / "content" / f"{f.file_id}.txt").write_text(f.content, encoding="utf-8")

    @classmethod
    def load(cls, directory: str | Path) -> "VectorIndex":
        directory = Path(directory)
        meta = json.loads((directory / "meta.json").read_text(encoding="utf-8"))
        files_meta = json.loads((directory / "files.json").read_text(encoding="utf-8"))
        files = [
            SourceFile(
                file_id=fm["file_id"],
                repo_path=fm["repo_path"],
                source_url=fm["source_url"],
                content=(directory / "content" / f"{fm['file_id']}.txt").read_text(
                    encoding="utf-8"
                ),
                kind=fm["kind"],
            )
            for fm in files_meta
        ]
        contents = {f.file_id: f.content for f in files}
        urls = {f.file_id: f.source_url for f in files}
        paths = {f.file_id: f.repo_path for f in files}
        chunks = [
            Chunk(
                chunk_id=rec["chunk_id"],
                file_id=rec["file_id"],
                char_start=rec["char_start"],
                char_end=rec["char_end"],
                text=contents[rec["file_id"]][rec["char_start"] : rec["char_end"]],
                metadata={
                    "source_url": urls[rec["file_id"]],
                    "repo_path": paths[rec["file_id"]],
                    "file_id": rec["file_id"],
                },
            )
            for rec in read_manifest(directory / "manifest.jsonl")
        ]
        vectors = np.load(directory / "vectors.npy")
        return cls(files, chunks, vectors, embedding_model=meta.get("embedding_model", ""))
