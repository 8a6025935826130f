"""Embedding and chat-completion providers: HTTP clients plus scripted mocks.

Wire shapes:
  embedding: POST {model, inputs: [str]}            -> {vectors: [[float]]}
  chat:      POST {model, messages, temperature}    -> {content: str}

The mock providers replay fixtures so the whole pipeline runs offline and
deterministically.
"""

from __future__ import annotations

import hashlib
import json
import re
import time
from pathlib import Path

import httpx
import numpy as np


class ProviderError(Exception):
    """Provider unreachable or returned an unusable response after retries."""


class ScriptGuardError(ProviderError):
    """A mock script guard did not match the request; the fixture has drifted."""


def _post_with_retries(
    url: str, payload: dict, retries: int, backoff: float, timeout: float
) -> dict:
    last_error: Exception | None = None
    for attempt in range(retries + 1):
        try:
            resp = httpx.post(url, json=payload, timeout=timeout)
            if resp.status_code >= 500:
                last_error = ProviderError(f"{url} returned {resp.status_code}")
            else:
                resp.raise_for_status()
                return resp.json()
        except httpx.HTTPError as exc:
            last_error = exc
        if attempt < retries:
            time.sleep(backoff * (2**attempt))
    raise ProviderError(f"request to {url} failed after {retries + 1} attempts: {last_error}")


class HttpEmbeddingProvider:
    def __init__(
        self,
        endpoint: str,
        model: str = "text-embedding-3-large",
        retries: int = 3,
        backoff: float = 0.5,
        timeout: float = 30.0,
    ):
        self.endpoint = endpoint
        self.model = model
        self.retries = retries
        self.backoff = backoff
        self.timeout = timeout

    def embed(self, texts: list[str]) -> list[list[float]]:
        if not texts:
            raise ValueError("texts must be non-empty")
        data = _post_with_retries(
            self.endpoint,
            {"model": self.model, "inputs": list(texts)},
            self.retries,
            self.backoff,
            self.timeout,
        )
        vectors = data.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProviderError("embedding response missing vectors or wrong cardinality")
        return vectors


_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _token_vector(token: str, dim: int) -> np.ndarray:
    seed = int.from_bytes(hashlib.sha256(token.encode("utf-8")).digest()[:8], "big")
    return np.random.default_rng(seed).standard_normal(dim)


def hashed_bag_of_words(text: str, dim: int) -> list[float]:
    """Deterministic stand-in embedding: sum of per-token hash vectors.

    Texts sharing words get positive cosine similarity; identical texts map
    to identical vectors, so an exact-text query scores 1.0.
    """
    tokens = _TOKEN_RE.findall(text.lower()) or ["<empty>"]
    acc = np.zeros(dim)
    for token in tokens:
        acc += _token_vector(token, dim)
    return acc.tolist()


class MockEmbeddingProvider:
    """Scripted table lookup with a hashing fallback for unknown texts.

    Script file: {"dimension": int, "model": str?, "vectors": {text: [float]}?}
    """

    def __init__(self, dimension: int = 256, vectors: dict[str, list[float]] | None = None,
                 model: str = "mock-embedding"):
        self.dimension = dimension
        self.vectors = dict(vectors or {})
        self.model = model
        for text, vec in self.vectors.items():
            if len(vec) != dimension:
                raise ValueError(f"scripted vector for {text!r} has wrong dimension")

    @classmethod
    def from_script(cls, path: str | Path) -> "MockEmbeddingProvider":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            dimension=data.get("dimension", 256),
            vectors=data.get("vectors"),
            model=data.get("model", "mock-embedding"),
        )

    def embed(self, texts: list[str]) -> list[list[float]]:
        if not texts:
            raise ValueError("texts must be non-empty")
        return [
            list(self.vectors[t]) if t in self.vectors else hashed_bag_of_words(t, self.dimension)
            for t in texts
        ]


class HttpChatProvider:
    def __init__(
        self,
        endpoint: str,
        model: str = "gpt-4o",
        temperature: float = 0.0,
        retries: int = 3,
        backoff: float = 0.5,
        timeout: float = 120.0,
    ):
        self.endpoint = endpoint
        self.model = model
        self.temperature = temperature
        self.retries = retries
        self.backoff = backoff
        self.timeout = timeout

    def complete(self, messages: list[dict]) -> str:
        data = _post_with_retries(
            self.endpoint,
            {"model": self.model, "messages": messages, "temperature": self.temperature},
            self.retries,
            self.backoff,
            self.timeout,
        )
        content = data.get("content")
        if not isinstance(content, str):
            raise ProviderError("chat response missing content")
        return content


class MockChatProvider:
    """Replays scripted responses selected by turn number and content guards.

    Rules: ordered list of {"respond": str, "turn": int?, "expect_substring": str?}.
    The turn number is the count of assistant messages already in the request,
    so selection depends only on the conversation itself. This keeps multiple
    concurrent agent runs sharing one provider fully deterministic. A request
    no rule matches fails loudly instead of answering something stale.
    """

    def __init__(self, rules: list[dict], model: str = "mock-chat"):
        self.rules = list(rules)
        self.model = model
        for rule in self.rules:
            if "respond" not in rule:
                raise ValueError("every script rule needs a 'respond' field")

    @classmethod
    def from_script(cls, path: str | Path) -> "MockChatProvider":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        rules = data["rules"] if isinstance(data, dict) else data
        return cls(rules, model=(data.get("model", "mock-chat") if isinstance(data, dict) else "mock-chat"))

    def complete(self, messages: list[dict]) -> str:
        turn = sum(1 for m in messages if m.get("role") == "assistant")
        transcript = "\n".join(str(m.get("content", "")) for m in messages)
        for rule in self.rules:
            if "turn" in rule and rule["turn"] != turn:
                continue
            if "expect_substring" in rule and rule["expect_substring"] not in transcript:
                continue
            return rule["respond"]
        raise ScriptGuardError(
            f"no script rule matched turn {turn}; request head: {transcript[:200]!r}"
        )
