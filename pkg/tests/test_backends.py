import json
import threading
import time
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest
from fastapi.testclient import TestClient

from capforge.backends import (
    BackendPolicy,
    HttpBackend,
    RateLimiter,
    StubBackend,
    make_backend,
)
from capforge.backends.base import ChatTurn, LalmRequest, LlmParams
from capforge.backends.stub_server import create_app
from capforge.errors import BackendUnavailable, DimensionMismatch, MalformedResponse


class TestStubDeterminism:
    def test_lalm_replay_identical(self, stub):
        req = LalmRequest(audio_uri="a1", prompt="Describe the audio.")
        assert stub.lalm_chat(req) == stub.lalm_chat(req)

    def test_lalm_depends_on_history(self, stub):
        req1 = LalmRequest(audio_uri="a1", prompt="p")
        req2 = LalmRequest(
            audio_uri="a1",
            history=[ChatTurn("user", "q"), ChatTurn("assistant", "r")],
            prompt="p",
        )
        assert stub.lalm_chat(req1) != stub.lalm_chat(req2)

    def test_lalm_depends_on_seed(self):
        req = LalmRequest(audio_uri="a1", prompt="p")
        assert StubBackend(seed=1).lalm_chat(req) != StubBackend(seed=2).lalm_chat(req)

    def test_empty_prompt_rejected(self):
        with pytest.raises(ValueError):
            LalmRequest(audio_uri="a1", prompt="")

    def test_llm_temperature_zero_deterministic(self, stub):
        params = LlmParams(temperature=0.0, seed=3)
        out1 = stub.llm_complete("sys", "Description: dog barking", params)
        out2 = stub.llm_complete("sys", "Description: dog barking", params)
        assert out1 == out2

    def test_llm_echoes_salient_nouns(self, stub):
        prompt = "Input Details:\n  Description: a dog barking loudly\n"
        out = stub.llm_complete("", prompt, LlmParams())
        assert "dog" in out.lower()

    def test_llm_seed_varies_output(self, stub):
        prompt = "Description: a dog barking near a river while birds chirp overhead"
        outs = {
            stub.llm_complete("", prompt, LlmParams(seed=s)) for s in range(8)
        }
        assert len(outs) > 1

    def test_llm_max_tokens_zero_rejected(self):
        with pytest.raises(ValueError):
            LlmParams(max_tokens=0)


class TestStubEmbeddings:
    def test_same_text_identical(self, stub):
        e1 = stub.embed([("text", "hello")])[0]
        e2 = stub.embed([("text", "hello")])[0]
        np.testing.assert_array_equal(e1.values, e2.values)

    def test_unit_norm(self, stub):
        for kind, value in [("text", "x"), ("audio", "uri://1")]:
            emb = stub.embed([(kind, value)])[0]
            assert abs(np.linalg.norm(emb.values) - 1.0) < 1e-6
            assert emb.normalized

    def test_planted_cosine(self, stub):
        stub.plant_cosine("audio", "a1", "text", "cap1", 0.9)
        ea = stub.embed([("audio", "a1")])[0]
        et = stub.embed([("text", "cap1")])[0]
        assert abs(ea.cosine(et) - 0.9) < 1e-6

    def test_planted_identical_vectors(self, stub):
        stub.plant_cosine("audio", "a1", "text", "same", 1.0)
        ea = stub.embed([("audio", "a1")])[0]
        et = stub.embed([("text", "same")])[0]
        assert abs(ea.cosine(et) - 1.0) < 1e-6

    def test_multiple_satellites_exact(self, stub):
        stub.plant_cosine("audio", "a1", "text", "t1", 0.2)
        stub.plant_cosine("audio", "a1", "text", "t2", 0.9)
        stub.plant_cosine("audio", "a1", "text", "t3", 0.1)
        ea = stub.embed([("audio", "a1")])[0]
        for text, want in [("t1", 0.2), ("t2", 0.9), ("t3", 0.1)]:
            et = stub.embed([("text", text)])[0]
            assert abs(ea.cosine(et) - want) < 1e-6

    def test_empty_inputs_rejected(self, stub):
        with pytest.raises(ValueError):
            stub.embed([])

    def test_satellite_cannot_be_replanted(self, stub):
        stub.plant_cosine("audio", "a", "text", "t", 0.5)
        with pytest.raises(ValueError):
            stub.plant_cosine("audio", "b", "text", "t", 0.3)


class _ScriptedHandler(BaseHTTPRequestHandler):
    script: list[int] = []
    requests_seen: int = 0

    def do_POST(self):
        cls = type(self)
        cls.requests_seen += 1
        status = cls.script.pop(0) if cls.script else 200
        length = int(self.headers.get("Content-Length", 0))
        self.rfile.read(length)
        if status != 200:
            self.send_response(status)
            self.end_headers()
            return
        body = json.dumps({"text": "ok"}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def scripted_server():
    _ScriptedHandler.script = []
    _ScriptedHandler.requests_seen = 0
    server = HTTPServer(("127.0.0.1", 0), _ScriptedHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}", _ScriptedHandler
    server.shutdown()


class TestHttpRetries:
    def _backend(self, url, max_retries=3):
        policy = BackendPolicy(
            max_retries=max_retries, backoff_base_ms=1, rate_limit_per_s=10_000
        )
        return HttpBackend(url, url, url, policy=policy)

    def test_500_twice_then_success(self, scripted_server):
        url, handler = scripted_server
        handler.script = [500, 500, 200]
        backend = self._backend(url, max_retries=3)
        text = backend.lalm_chat(LalmRequest(audio_uri="a", prompt="p"))
        assert text == "ok"
        assert handler.requests_seen == 3

    def test_retries_exhausted(self, scripted_server):
        url, handler = scripted_server
        handler.script = [500] * 10
        backend = self._backend(url, max_retries=2)
        with pytest.raises(BackendUnavailable):
            backend.lalm_chat(LalmRequest(audio_uri="a", prompt="p"))
        # total attempts = retries + 1
        assert handler.requests_seen == 3

    def test_4xx_not_retried(self, scripted_server):
        url, handler = scripted_server
        handler.script = [400]
        backend = self._backend(url, max_retries=3)
        with pytest.raises(BackendUnavailable):
            backend.lalm_chat(LalmRequest(audio_uri="a", prompt="p"))
        assert handler.requests_seen == 1


class TestRateLimiter:
    def test_spacing(self):
        limiter = RateLimiter(100.0)
        start = time.monotonic()
        for _ in range(5):
            limiter.acquire()
        elapsed = time.monotonic() - start
        # burst of 1, then 4 spaced intervals of 10 ms
        assert elapsed >= 0.035

    def test_burst_of_one_is_free(self):
        limiter = RateLimiter(1.0)
        start = time.monotonic()
        limiter.acquire()
        assert time.monotonic() - start < 0.1


class TestStubServer:
    @pytest.fixture
    def client(self, tmp_path):
        fixture = tmp_path / "fixture.json"
        fixture.write_text(
            json.dumps(
                {
                    "planted": [
                        {
                            "a": {"kind": "audio", "value": "a1"},
                            "b": {"kind": "text", "value": "cap1"},
                            "cosine": 0.4,
                        }
                    ]
                }
            )
        )
        return TestClient(create_app(seed=0, fixture=fixture))

    def test_lalm_deterministic(self, client):
        body = {"audio_uri": "a", "history": [], "prompt": "p"}
        r1 = client.post("/v1/lalm/chat", json=body)
        r2 = client.post("/v1/lalm/chat", json=body)
        assert r1.status_code == 200
        assert r1.json() == r2.json()

    def test_llm_openai_shape(self, client):
        body = {
            "messages": [{"role": "user", "content": "Description: rain falling"}],
            "max_tokens": 64,
            "temperature": 0.0,
            "seed": 0,
        }
        resp = client.post("/v1/chat/completions", json=body)
        assert resp.status_code == 200
        content = resp.json()["choices"][0]["message"]["content"]
        assert "rain" in content.lower()

    def test_embed_planted_cosine(self, client):
        body = {
            "inputs": [
                {"kind": "audio", "value": "a1"},
                {"kind": "text", "value": "cap1"},
            ]
        }
        resp = client.post("/v1/clap/embed", json=body)
        data = resp.json()
        va, vt = np.array(data["embeddings"][0]), np.array(data["embeddings"][1])
        assert abs(float(va @ vt) - 0.4) < 1e-6
        assert len(va) == data["dim"]

    def test_malformed_body_rejected(self, client):
        resp = client.post("/v1/clap/embed", content=b"not json")
        assert resp.status_code in (400, 422)

    def test_empty_prompt_400(self, client):
        resp = client.post(
            "/v1/lalm/chat", json={"audio_uri": "a", "history": [], "prompt": ""}
        )
        assert resp.status_code == 400


class TestHttpBackendAgainstStubServer:
    """End-to-end: HTTP clients talking to the stub server wire formats."""

    @pytest.fixture
    def server_url(self):
        import uvicorn

        app = create_app(seed=0)
        config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
        server = uvicorn.Server(config)
        thread = threading.Thread(target=server.run, daemon=True)
        thread.start()
        while not server.started:
            time.sleep(0.01)
        host, port = server.servers[0].sockets[0].getsockname()[:2]
        yield f"http://{host}:{port}"
        server.should_exit = True
        thread.join(timeout=5)

    def test_all_three_services(self, server_url):
        policy = BackendPolicy(rate_limit_per_s=10_000, backoff_base_ms=1)
        backend = HttpBackend(server_url, server_url, server_url, policy=policy)
        text = backend.lalm_chat(LalmRequest(audio_uri="a", prompt="p"))
        assert text
        out = backend.llm_complete("", "Description: wind blowing", LlmParams(seed=1))
        assert "wind" in out.lower()
        embs = backend.embed([("text", "x"), ("audio", "uri://y")])
        assert len(embs) == 2
        assert abs(np.linalg.norm(embs[0].values) - 1.0) < 1e-6

    def test_matches_in_process_stub(self, server_url):
        policy = BackendPolicy(rate_limit_per_s=10_000)
        backend = HttpBackend(server_url, server_url, server_url, policy=policy)
        local = StubBackend(seed=0)
        req = LalmRequest(audio_uri="u", prompt="describe")
        assert backend.lalm_chat(req) == local.lalm_chat(req)


def test_make_backend_stub_default(monkeypatch):
    monkeypatch.delenv("CAPFORGE_BACKEND", raising=False)
    assert isinstance(make_backend(), StubBackend)


def test_make_backend_http_requires_urls(monkeypatch):
    for var in ("CAPFORGE_LALM_URL", "CAPFORGE_LLM_URL", "CAPFORGE_CLAP_URL"):
        monkeypatch.delenv(var, raising=False)
    with pytest.raises(ValueError):
        make_backend("http")


def test_make_backend_http_from_env(monkeypatch):
    monkeypatch.setenv("CAPFORGE_LALM_URL", "http://x")
    monkeypatch.setenv("CAPFORGE_LLM_URL", "http://y")
    monkeypatch.setenv("CAPFORGE_CLAP_URL", "http://z")
    assert isinstance(make_backend("http"), HttpBackend)
