"""Transport behavior of the live backend against a local stub server."""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from dashsim.frames import FramePack, VideoRef
from dashsim.gateway import GatewayError, HttpBackend, HttpEndpointConfig, PromptPayload


class _StubHandler(BaseHTTPRequestHandler):
    script: list  # [(status, body-dict-or-None, delay_s)]
    hits: list

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = self.rfile.read(length)
        type(self).hits.append(body)
        status, payload, delay = self.script[min(len(self.hits) - 1, len(self.script) - 1)]
        if delay:
            time.sleep(delay)
        data = json.dumps(payload or {}).encode()
        try:
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)
        except (BrokenPipeError, ConnectionResetError):
            pass

    def log_message(self, *args):
        pass


@pytest.fixture
def stub_server():
    servers = []

    def start(script):
        handler = type("Handler", (_StubHandler,), {"script": script, "hits": []})
        server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
        server.daemon_threads = True
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        servers.append(server)
        return f"http://127.0.0.1:{server.server_address[1]}", handler

    yield start
    for server in servers:
        server.shutdown()
        server.server_close()


def completion(text: str) -> dict:
    return {"choices": [{"message": {"content": text}}]}


def payload() -> PromptPayload:
    ref = VideoRef(path="clip.json", frame_count=4, fps=20.0, duration_s=0.2)
    pack = FramePack(source=ref, indices=(0, 3), images=(("jpeg", b"a"), ("jpeg", b"b")),
                     width=4, height=3)
    return PromptPayload(role="script", system_text="sys", examples=(), query_frames=pack)


def backend_for(url: str, monkeypatch, **overrides) -> HttpBackend:
    monkeypatch.setenv("STUB_KEY", "secret")
    settings = dict(
        url=url, model="stub-model", credential_env="STUB_KEY",
        retry_cap=2, deadline_s=2.0, backoff_base_s=0.01,
    )
    settings.update(overrides)
    return HttpBackend(HttpEndpointConfig(**settings))


def test_fixed_body_passthrough(stub_server, monkeypatch):
    url, handler = stub_server([(200, completion("hello from stub"), 0)])
    backend = backend_for(url, monkeypatch)
    assert backend.complete(payload()) == "hello from stub"
    assert len(handler.hits) == 1
    sent = json.loads(handler.hits[0])
    assert sent["model"] == "stub-model"
    assert sent["messages"][0]["role"] == "system"


def test_retry_schedule_429_429_200(stub_server, monkeypatch):
    url, handler = stub_server([
        (429, None, 0), (429, None, 0), (200, completion("after retries"), 0),
    ])
    backend = backend_for(url, monkeypatch)
    assert backend.complete(payload()) == "after retries"
    assert len(handler.hits) == 3  # two retries, success on the third attempt


def test_request_bodies_identical_across_attempts(stub_server, monkeypatch):
    url, handler = stub_server([(429, None, 0), (200, completion("ok"), 0)])
    backend = backend_for(url, monkeypatch)
    backend.complete(payload())
    assert handler.hits[0] == handler.hits[1]


def test_deadline_exhausts_attempts(stub_server, monkeypatch):
    url, handler = stub_server([(200, completion("late"), 10.0)])
    backend = backend_for(url, monkeypatch, deadline_s=0.3)
    with pytest.raises(GatewayError) as exc_info:
        backend.complete(payload())
    assert exc_info.value.kind == "deadline"
    assert len(handler.hits) == 3  # retry cap 2 -> 3 attempts total
    assert exc_info.value.attempts == 3


def test_server_errors_are_retryable_transport(stub_server, monkeypatch):
    url, handler = stub_server([(500, None, 0), (200, completion("recovered"), 0)])
    backend = backend_for(url, monkeypatch)
    assert backend.complete(payload()) == "recovered"
    assert len(handler.hits) == 2


def test_contentless_response_not_retried(stub_server, monkeypatch):
    url, handler = stub_server([(200, {"choices": []}, 0)])
    backend = backend_for(url, monkeypatch)
    with pytest.raises(GatewayError) as exc_info:
        backend.complete(payload())
    assert exc_info.value.kind == "malformed_response"
    assert len(handler.hits) == 1  # non-retryable: exactly one attempt


def test_missing_credential_fails_at_construction(monkeypatch):
    monkeypatch.delenv("NOPE_KEY", raising=False)
    with pytest.raises(ValueError):
        HttpBackend(HttpEndpointConfig(
            url="http://127.0.0.1:9", model="m", credential_env="NOPE_KEY",
        ))
