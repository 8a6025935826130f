import json
from pathlib import Path

import pytest

from repoguide.config import AppConfig, ProviderConfig
from repoguide.ingest import IngestConfig, chunk_corpus, scan_repository
from repoguide.providers import MockChatProvider, MockEmbeddingProvider
from repoguide.vectorstore import VectorIndex

FIXTURES = Path(__file__).parent / "fixtures"
FIXTURE_REPO = FIXTURES / "repo"
CHAT_SCRIPT = FIXTURES / "chat_script.json"
EMBEDDING_SCRIPT = FIXTURES / "embedding_script.json"
GOLDEN_ANSWER = FIXTURES / "golden_answer.md"


@pytest.fixture(scope="session")
def embed_provider():
    return MockEmbeddingProvider.from_script(EMBEDDING_SCRIPT)


@pytest.fixture(scope="session")
def chat_provider():
    return MockChatProvider.from_script(CHAT_SCRIPT)


@pytest.fixture(scope="session")
def fixture_files():
    return scan_repository(FIXTURE_REPO, IngestConfig())


@pytest.fixture(scope="session")
def fixture_index(fixture_files, embed_provider):
    chunks = chunk_corpus(fixture_files, IngestConfig())
    return VectorIndex.build(fixture_files, chunks, embed_provider)


@pytest.fixture()
def app_config(tmp_path):
    return AppConfig(
        data_dir=tmp_path / "data",
        embedding=ProviderConfig(script=str(EMBEDDING_SCRIPT)),
        llm=ProviderConfig(script=str(CHAT_SCRIPT)),
    )


def write_config_file(tmp_path: Path, data_dir: Path) -> Path:
    config = {
        "data_dir": str(data_dir),
        "embedding": {"script": str(EMBEDDING_SCRIPT)},
        "llm": {"script": str(CHAT_SCRIPT)},
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config), encoding="utf-8")
    return path
