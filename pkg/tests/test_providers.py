import httpx
import pytest

from repoguide.providers import (
    HttpChatProvider,
    HttpEmbeddingProvider,
    MockChatProvider,
    MockEmbeddingProvider,
    ProviderError,
    ScriptGuardError,
)


class FakeResponse:
    def __init__(self, status_code=200, payload=None):
        self.status_code = status_code
        self._payload = payload or {}

    def raise_for_status(self):
        if self.status_code >= 400:
            raise httpx.HTTPStatusError("boom", request=None, response=None)

    def json(self):
        return self._payload


class TestHttpEmbedding:
    def test_success_after_transient_failures(self, monkeypatch):
        calls = []

        def fake_post(url, json=None, timeout=None):
            calls.append(json)
            if len(calls) < 3:
                return FakeResponse(status_code=503)
            return FakeResponse(payload={"vectors": [[1.0, 0.0]] * len(json["inputs"])})

        monkeypatch.setattr(httpx, "post", fake_post)
        monkeypatch.setattr("time.sleep", lambda s: None)
        provider = HttpEmbeddingProvider("http://emb.test/v1", retries=3, backoff=0)
        vectors = provider.embed(["a", "b"])
        assert len(vectors) == 2
        assert len(calls) == 3
        assert calls[0]["model"] == "text-embedding-3-large"
        assert calls[0]["inputs"] == ["a", "b"]

    def test_hard_failure_after_bounded_retries(self, monkeypatch):
        calls = []

        def fake_post(url, json=None, timeout=None):
            calls.append(1)
            raise httpx.ConnectError("no route")

        monkeypatch.setattr(httpx, "post", fake_post)
        provider = HttpEmbeddingProvider("http://emb.test/v1", retries=2, backoff=0)
        with pytest.raises(ProviderError):
            provider.embed(["a"])
        assert len(calls) == 3  # first try + 2 retries

    def test_wrong_cardinality_rejected(self, monkeypatch):
        monkeypatch.setattr(
            httpx, "post", lambda url, json=None, timeout=None: FakeResponse(payload={"vectors": [[1.0]]})
        )
        provider = HttpEmbeddingProvider("http://emb.test/v1", retries=0)
        with pytest.raises(ProviderError):
            provider.embed(["a", "b"])


class TestHttpChat:
    def test_request_shape_and_temperature_zero(self, monkeypatch):
        seen = {}

        def fake_post(url, json=None, timeout=None):
            seen.update(json)
            return FakeResponse(payload={"content": "hello"})

        monkeypatch.setattr(httpx, "post", fake_post)
        provider = HttpChatProvider("http://llm.test/v1", model="gpt-4o")
        out = provider.complete([{"role": "user", "content": "hi"}])
        assert out == "hello"
        assert seen["temperature"] == 0.0
        assert seen["messages"] == [{"role": "user", "content": "hi"}]

    def test_missing_content_is_provider_error(self, monkeypatch):
        monkeypatch.setattr(
            httpx, "post", lambda url, json=None, timeout=None: FakeResponse(payload={"nope": 1})
        )
        with pytest.raises(ProviderError):
            HttpChatProvider("http://llm.test/v1", retries=0).complete([])


class TestMockChat:
    def test_turn_keyed_selection(self):
        provider = MockChatProvider(
            [
                {"turn": 0, "respond": "first"},
                {"turn": 1, "respond": "second"},
            ]
        )
        msgs = [{"role": "user", "content": "q"}]
        assert provider.complete(msgs) == "first"
        msgs += [{"role": "assistant", "content": "first"}, {"role": "user", "content": "again"}]
        assert provider.complete(msgs) == "second"

    def test_guard_mismatch_fails_loudly(self):
        provider = MockChatProvider([{"expect_substring": "payments", "respond": "x"}])
        with pytest.raises(ScriptGuardError):
            provider.complete([{"role": "user", "content": "something else"}])

    def test_stateless_selection_is_order_independent(self):
        provider = MockChatProvider(
            [
                {"expect_substring": "alpha", "respond": "A"},
                {"expect_substring": "beta", "respond": "B"},
            ]
        )
        a = [{"role": "user", "content": "about alpha"}]
        b = [{"role": "user", "content": "about beta"}]
        assert provider.complete(b) == "B"
        assert provider.complete(a) == "A"
        assert provider.complete(b) == "B"


def test_mock_embedding_scripts_roundtrip(tmp_path):
    script = tmp_path / "emb.json"
    script.write_text('{"dimension": 3, "vectors": {"foo": [1.0, 2.0, 2.0]}}')
    provider = MockEmbeddingProvider.from_script(script)
    assert provider.embed(["foo"]) == [[1.0, 2.0, 2.0]]
    # hashing fallback is deterministic for unknown texts
    assert provider.embed(["bar"]) == provider.embed(["bar"])
