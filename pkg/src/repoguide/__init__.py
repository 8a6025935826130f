"""Repository onboarding assistant engine.

Indexes a codebase into an in-memory vector store and answers developer
questions through a chain of cooperating agents (contextualizer, planning
agent, recursive step processor, verifying message enhancer).
"""

from repoguide.ingest import Chunk, IngestConfig, SourceFile, chunk_file, scan_repository
from repoguide.vectorstore import SearchHit, SearchParams, VectorIndex, score

__all__ = [
    "Chunk",
    "IngestConfig",
    "SourceFile",
    "chunk_file",
    "scan_repository",
    "SearchHit",
    "SearchParams",
    "VectorIndex",
    "score",
]
