import json
import threading
from pathlib import Path

import pytest

from inquest.errors import ConfigurationError, ParseError, ReplayMissError, TransportError
from inquest.llmgate import (
    GatewayConfig,
    LLMGateway,
    Message,
    PromptRequest,
    parse_likert,
    record_completion,
    record_embedding,
)

FIXTURES = Path(__file__).parent / "fixtures"


def make_request(content="Hello?", model="test-model") -> PromptRequest:
    return PromptRequest(model=model, messages=(Message("user", content),))


class TestPromptRequest:
    def test_cache_key_survives_serialization(self):
        request = make_request()
        reloaded = PromptRequest.from_dict(json.loads(json.dumps(request.to_dict())))
        assert reloaded.cache_key() == request.cache_key()

    def test_cache_key_sensitive_to_fields(self):
        a = make_request("Hello?")
        b = make_request("Goodbye?")
        c = PromptRequest(model="test-model", messages=a.messages, temperature=0.5)
        assert len({a.cache_key(), b.cache_key(), c.cache_key()}) == 3

    def test_empty_messages_rejected(self):
        with pytest.raises(ConfigurationError):
            PromptRequest(model="m", messages=())

    def test_negative_temperature_rejected(self):
        with pytest.raises(ConfigurationError):
            PromptRequest(model="m", messages=(Message("user", "x"),), temperature=-1)


class TestReplayAndCache:
    def test_replay_returns_fixture_text(self, tmp_path):
        request = make_request()
        record_completion(tmp_path, request, "A canned answer.")
        gateway = LLMGateway(cache_dir=tmp_path, mode="replay")
        response = gateway.complete(request)
        assert response.text == "A canned answer."
        assert response.cached is True

    def test_replay_miss_names_the_key(self, tmp_path):
        gateway = LLMGateway(cache_dir=tmp_path, mode="replay")
        request = make_request()
        with pytest.raises(ReplayMissError) as err:
            gateway.complete(request)
        assert request.cache_key() in str(err.value)

    def test_identical_requests_hit_cache(self, tmp_path):
        request = make_request()
        record_completion(tmp_path, request, "Same.")
        gateway = LLMGateway(cache_dir=tmp_path, mode="replay")
        first = gateway.complete(request)
        second = gateway.complete(make_request())
        assert second.cached and second.text == first.text

    def test_embedding_replay_round_trip(self, tmp_path):
        record_embedding(tmp_path, "emb-model", "some text", [1.0, 2.0, 3.0])
        gateway = LLMGateway(
            config=GatewayConfig(embedding_model="emb-model"), cache_dir=tmp_path, mode="replay"
        )
        vec = gateway.embed("some text")
        assert vec.values == (1.0, 2.0, 3.0)
        assert vec.provider == "emb-model"
        assert gateway.embed("some text").values == vec.values

    def test_embedding_dimension_mismatch_detected(self, tmp_path):
        record_embedding(tmp_path, "emb-model", "short", [1.0, 2.0])
        record_embedding(tmp_path, "emb-model", "long", [1.0, 2.0, 3.0])
        gateway = LLMGateway(
            config=GatewayConfig(embedding_model="emb-model"), cache_dir=tmp_path, mode="replay"
        )
        gateway.embed("short")
        with pytest.raises(ConfigurationError):
            gateway.embed("long")

    def test_empty_text_embedding_rejected(self, tmp_path):
        gateway = LLMGateway(cache_dir=tmp_path, mode="replay")
        with pytest.raises(ConfigurationError):
            gateway.embed("  ")

    def test_online_mode_requires_base_url(self, tmp_path):
        with pytest.raises(ConfigurationError):
            LLMGateway(cache_dir=tmp_path, mode="online")

    def test_concurrent_replay_reads(self, tmp_path):
        request = make_request()
        record_completion(tmp_path, request, "ok")
        gateway = LLMGateway(cache_dir=tmp_path, mode="replay")
        results = []

        def read():
            results.append(gateway.complete(request).text)

        threads = [threading.Thread(target=read) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert results == ["ok"] * 8


class TestHttpRetries:
    def test_retries_then_succeeds(self, tmp_path, monkeypatch):
        import httpx

        calls = {"n": 0}

        def fake_post(url, json=None, headers=None, timeout=None):
            calls["n"] += 1
            if calls["n"] < 3:
                return httpx.Response(429, request=httpx.Request("POST", url))
            return httpx.Response(
                200,
                request=httpx.Request("POST", url),
                json={
                    "choices": [{"message": {"content": "live answer"}}],
                    "usage": {"total_tokens": 7},
                },
            )

        monkeypatch.setattr(httpx, "post", fake_post)
        monkeypatch.setattr("time.sleep", lambda s: None)
        gateway = LLMGateway(
            config=GatewayConfig(base_url="http://mock", max_retries=3, backoff_base=0.0),
            cache_dir=tmp_path,
            mode="online",
        )
        response = gateway.complete(make_request())
        assert response.text == "live answer"
        assert calls["n"] == 3
        # second call comes from cache without HTTP
        assert gateway.complete(make_request()).cached is True
        assert calls["n"] == 3

    def test_exhausted_retries_raise_transport_error(self, tmp_path, monkeypatch):
        import httpx

        def always_429(url, json=None, headers=None, timeout=None):
            return httpx.Response(429, request=httpx.Request("POST", url))

        monkeypatch.setattr(httpx, "post", always_429)
        monkeypatch.setattr("time.sleep", lambda s: None)
        gateway = LLMGateway(
            config=GatewayConfig(base_url="http://mock", max_retries=2, backoff_base=0.0),
            cache_dir=tmp_path,
            mode="online",
        )
        with pytest.raises(TransportError):
            gateway.complete(make_request())


class TestGatewayConfig:
    def test_env_overrides_file(self, tmp_path, monkeypatch):
        cfg_path = tmp_path / "config.json"
        cfg_path.write_text(json.dumps({"base_url": "http://file", "api_key": "file-key"}))
        monkeypatch.setenv("INQUEST_BASE_URL", "http://env")
        config = GatewayConfig.from_file(cfg_path)
        assert config.base_url == "http://env"
        assert config.api_key == "file-key"


class TestParseLikert:
    def test_direct_match(self):
        assert parse_likert("Score: 4", 1, 5) == 4

    def test_trailing_verdict_sentence(self):
        assert parse_likert("reasoning... so I give it a 5.", 1, 5) == 5

    def test_no_number_raises(self):
        with pytest.raises(ParseError):
            parse_likert("no number here", 1, 5)

    def test_result_always_in_range(self):
        assert parse_likert("I pondered 7 then wrote 9; final 3", 1, 5) == 3

    def test_fixture_corpus_hand_checked(self):
        cases = [
            json.loads(line)
            for line in (FIXTURES / "likert_responses.jsonl").read_text().splitlines()
            if line.strip()
        ]
        assert len(cases) == 100
        successes = 0
        for case in cases:
            try:
                got = parse_likert(case["text"], case["lo"], case["hi"])
            except ParseError:
                got = None
            assert got == case["expected"], case["text"]
            if got is not None:
                successes += 1
        assert successes / len(cases) >= 0.95
