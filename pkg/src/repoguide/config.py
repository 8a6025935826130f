"""Application configuration shared by the CLI and the HTTP service.

Config file is JSON. Every field has a documented default; for each provider
exactly one of an HTTP endpoint or a mock script path must be configured.

Defaults:
  data_dir            "./repoguide-data"
  embedding.model     "text-embedding-3-large"
  llm.model           "gpt-4o"
  llm.temperature     0.0
  listen.host/port    127.0.0.1:8000
  agent.max_iterations 8, agent.max_tool_calls 12, agent.scratchpad_budget 20000
  orchestrator.max_depth 2, branching_cap 5, concurrency 4, context_turns 6
  ingest.chunk_size   2000, ingest.overlap 200
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from repoguide.agent import AgentConfig
from repoguide.ingest import IngestConfig
from repoguide.orchestrator import OrchestratorConfig
from repoguide.providers import (
    HttpChatProvider,
    HttpEmbeddingProvider,
    MockChatProvider,
    MockEmbeddingProvider,
)


class ConfigError(ValueError):
    pass


@dataclass
class ProviderConfig:
    endpoint: str | None = None
    model: str = ""
    script: str | None = None
    temperature: float = 0.0

    def validate(self, name: str) -> None:
        if (self.endpoint is None) == (self.script is None):
            raise ConfigError(
                f"{name} provider needs exactly one of 'endpoint' or 'script'"
            )


@dataclass
class AppConfig:
    data_dir: Path = Path("repoguide-data")
    embedding: ProviderConfig = field(
        default_factory=lambda: ProviderConfig(model="text-embedding-3-large")
    )
    llm: ProviderConfig = field(default_factory=lambda: ProviderConfig(model="gpt-4o"))
    host: str = "127.0.0.1"
    port: int = 8000
    ingest: IngestConfig = field(default_factory=IngestConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    max_depth: int = 2
    branching_cap: int = 5
    concurrency: int = 4
    context_turns: int = 6
    source_url_base: str | None = None

    @property
    def index_dir(self) -> Path:
        return self.data_dir / "index"

    def orchestrator_config(self) -> OrchestratorConfig:
        return OrchestratorConfig(
            max_depth=self.max_depth,
            branching_cap=self.branching_cap,
            concurrency=self.concurrency,
            context_turns=self.context_turns,
            agent=self.agent,
        )

    def embedding_provider(self):
        self.embedding.validate("embedding")
        if self.embedding.script:
            return MockEmbeddingProvider.from_script(self.embedding.script)
        return HttpEmbeddingProvider(self.embedding.endpoint, model=self.embedding.model)

    def chat_provider(self):
        self.llm.validate("llm")
        if self.llm.script:
            return MockChatProvider.from_script(self.llm.script)
        return HttpChatProvider(
            self.llm.endpoint, model=self.llm.model, temperature=self.llm.temperature
        )


def _provider_config(data: dict, default_model: str) -> ProviderConfig:
    return ProviderConfig(
        endpoint=data.get("endpoint"),
        model=data.get("model", default_model),
        script=data.get("script"),
        temperature=data.get("temperature", 0.0),
    )


def load_config(path: str | Path) -> AppConfig:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    base = Path(path).parent

    def respath(value: str) -> str:
        p = Path(value)
        return str(p if p.is_absolute() else base / p)

    embedding = _provider_config(data.get("embedding", {}), "text-embedding-3-large")
    llm = _provider_config(data.get("llm", {}), "gpt-4o")
    for prov in (embedding, llm):
        if prov.script:
            prov.script = respath(prov.script)

    agent_data = data.get("agent", {})
    orch_data = data.get("orchestrator", {})
    ingest_data = data.get("ingest", {})
    listen = data.get("listen", {})
    config = AppConfig(
        data_dir=Path(respath(data.get("data_dir", "repoguide-data"))),
        embedding=embedding,
        llm=llm,
        host=listen.get("host", "127.0.0.1"),
        port=listen.get("port", 8000),
        ingest=IngestConfig(
            chunk_size=ingest_data.get("chunk_size", 2000),
            overlap=ingest_data.get("overlap", 200),
            include_globs=tuple(ingest_data.get("include_globs", ["*"])),
            exclude_globs=tuple(ingest_data.get("exclude_globs", [])),
        ),
        agent=AgentConfig(
            max_iterations=agent_data.get("max_iterations", 8),
            max_tool_calls=agent_data.get("max_tool_calls", 12),
            scratchpad_budget=agent_data.get("scratchpad_budget", 20000),
            prompt_set=agent_data.get("prompt_set", "default"),
        ),
        max_depth=orch_data.get("max_depth", 2),
        branching_cap=orch_data.get("branching_cap", 5),
        concurrency=orch_data.get("concurrency", 4),
        context_turns=orch_data.get("context_turns", 6),
        source_url_base=data.get("source_url_base"),
    )
    config.embedding.validate("embedding")
    config.llm.validate("llm")
    return config
