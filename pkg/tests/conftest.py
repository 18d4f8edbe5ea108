"""Shared fixtures: a small synthetic city and a scriptable HTTP stub server."""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from uavnav import gen_synthetic_city


@pytest.fixture(scope="session")
def small_city():
    """A 300 m city with 5 landmarks and 8 episodes, fixed seed."""
    return gen_synthetic_city(seed=11, extent=300.0, n_landmarks=5, n_episodes=8)


@pytest.fixture()
def episode(small_city):
    _, episodes = small_city
    return episodes[0]


def chat_reply(text: str) -> bytes:
    """A minimal well-formed chat-completions response body."""
    return json.dumps({"choices": [{"message": {"content": text}}]}).encode("utf-8")


class _StubHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        length = int(self.headers.get("Content-Length", "0"))
        raw = self.rfile.read(length)
        try:
            body = json.loads(raw)
        except ValueError:
            body = raw
        self.server.requests.append(
            {"path": self.path, "headers": dict(self.headers), "body": body}
        )
        status, payload, delay = self.server.next_step()
        if delay:
            time.sleep(delay)
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        try:
            self.wfile.write(payload)
        except (BrokenPipeError, ConnectionResetError):
            pass  # client gave up (timeout test); the request is already recorded

    def log_message(self, fmt, *args):
        pass


class StubServer(ThreadingHTTPServer):
    """Local endpoint that plays back a scripted list of responses.

    Each script entry is (status, payload_bytes) or (status,
    payload_bytes, delay_seconds). The last entry repeats once the
    script is exhausted. Every request seen is recorded with its path,
    headers, and decoded JSON body.
    """

    daemon_threads = True

    def __init__(self, script):
        super().__init__(("127.0.0.1", 0), _StubHandler)
        self.script = list(script)
        self.cursor = 0
        self.requests = []
        self._lock = threading.Lock()

    def next_step(self):
        with self._lock:
            entry = self.script[min(self.cursor, len(self.script) - 1)]
            self.cursor += 1
        if len(entry) == 2:
            status, payload = entry
            delay = 0.0
        else:
            status, payload, delay = entry
        return status, payload, delay

    @property
    def url(self) -> str:
        host, port = self.server_address
        return f"http://{host}:{port}/v1/chat/completions"


@pytest.fixture()
def stub_server():
    """Factory fixture: start a StubServer for a script, shut it down after."""
    servers = []

    def start(script) -> StubServer:
        server = StubServer(script)
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        servers.append(server)
        return server

    yield start
    for server in servers:
        server.shutdown()
        server.server_close()
