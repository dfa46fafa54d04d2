"""Transport clients: mocks, retry behavior, and the HTTP reference path."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from pns_engine.clients import (
    HttpJudgeClient,
    HttpRmClient,
    MockExhaustedError,
    MockLookupError,
    RetryingJudgeClient,
    RetryingRmClient,
    ScriptedJudgeMock,
    ScriptedRmMock,
    TableJudgeMock,
    TableRmMock,
    TransportError,
    score_with_rm,
)
from pns_engine.config import RetryPolicy


class TestTableMocks:
    def test_judge_lookup(self):
        mock = TableJudgeMock({("format-judge", "p1"): "reply1"})
        assert mock.complete("format-judge", "p1") == "reply1"

    def test_judge_miss_raises(self):
        with pytest.raises(MockLookupError):
            TableJudgeMock({}).complete("format-judge", "p1")

    def test_judge_string_default(self):
        mock = TableJudgeMock({}, default="fallback")
        assert mock.complete("cot-judge", "anything") == "fallback"

    def test_judge_role_default(self):
        mock = TableJudgeMock({}, default={"format-judge": "fj", "cot-judge": "cj"})
        assert mock.complete("format-judge", "x") == "fj"
        assert mock.complete("cot-judge", "x") == "cj"
        with pytest.raises(MockLookupError):
            mock.complete("error-judge", "x")

    def test_judge_fail_keys(self):
        mock = TableJudgeMock({("format-judge", "p"): "r"},
                              fail_keys=[("format-judge", "p")])
        with pytest.raises(TransportError):
            mock.complete("format-judge", "p")

    def test_rm_lookup_and_default(self):
        mock = TableRmMock({("q", "r"): 2.5}, default=-1.0)
        assert mock.score("q", "r") == 2.5
        assert mock.score("q", "other") == -1.0

    def test_rm_miss_raises(self):
        with pytest.raises(MockLookupError):
            TableRmMock({}).score("q", "r")

    def test_rm_fail_keys(self):
        mock = TableRmMock({("q", "r"): 1.0}, fail_keys=[("q", "r")])
        with pytest.raises(TransportError):
            mock.score("q", "r")

    def test_rm_noise_seeded(self):
        a = TableRmMock({("q", "r"): 1.0}, noise_std=0.1, seed=42)
        b = TableRmMock({("q", "r"): 1.0}, noise_std=0.1, seed=42)
        assert a.score("q", "r") == b.score("q", "r")
        assert a.score("q", "r") != 1.0

    def test_score_with_rm_passthrough(self):
        mock = TableRmMock({("q", "r"): 2.5})
        assert score_with_rm(mock, "q", "r") == 2.5


class TestScriptedMocks:
    def test_sequence_and_exhaustion(self):
        mock = ScriptedJudgeMock(["a", "b"])
        assert mock.complete("format-judge", "x") == "a"
        assert mock.complete("cot-judge", "y") == "b"
        with pytest.raises(MockExhaustedError):
            mock.complete("format-judge", "z")

    def test_rm_sequence(self):
        mock = ScriptedRmMock([1.0, -2.0])
        assert mock.score("q", "r") == 1.0
        assert mock.score("q", "r") == -2.0
        with pytest.raises(MockExhaustedError):
            mock.score("q", "r")


class _FlakyJudge:
    def __init__(self, failures: int, reply: str = "ok"):
        self.failures = failures
        self.calls = 0
        self.reply = reply

    def complete(self, role, prompt):
        self.calls += 1
        if self.calls <= self.failures:
            raise TransportError("flaky")
        return self.reply


class TestRetry:
    def test_succeeds_after_retries(self):
        inner = _FlakyJudge(failures=2)
        sleeps = []
        client = RetryingJudgeClient(inner, RetryPolicy(attempts=3, base_delay=0.1),
                                     sleep=sleeps.append)
        assert client.complete("format-judge", "p") == "ok"
        assert inner.calls == 3
        assert sleeps == [0.1, 0.2]

    def test_exhausted_reraises(self):
        inner = _FlakyJudge(failures=10)
        client = RetryingJudgeClient(inner, RetryPolicy(attempts=3, base_delay=0.0),
                                     sleep=lambda _: None)
        with pytest.raises(TransportError):
            client.complete("format-judge", "p")
        assert inner.calls == 3

    def test_rm_retry(self):
        class FlakyRm:
            calls = 0

            def score(self, q, r):
                self.calls += 1
                if self.calls < 2:
                    raise TransportError("flaky")
                return 1.5

        inner = FlakyRm()
        client = RetryingRmClient(inner, RetryPolicy(attempts=2, base_delay=0.0),
                                  sleep=lambda _: None)
        assert client.score("q", "r") == 1.5

    def test_non_transport_errors_not_retried(self):
        class Broken:
            calls = 0

            def complete(self, role, prompt):
                self.calls += 1
                raise MockLookupError("missing")

        inner = Broken()
        client = RetryingJudgeClient(inner, RetryPolicy(attempts=3, base_delay=0.0),
                                     sleep=lambda _: None)
        with pytest.raises(MockLookupError):
            client.complete("format-judge", "p")
        assert inner.calls == 1


class _Handler(BaseHTTPRequestHandler):
    def do_POST(self):
        length = int(self.headers["Content-Length"])
        body = json.loads(self.rfile.read(length))
        if self.path == "/judge":
            payload = {"text": f"echo:{body['role']}:{len(body['prompt'])}"}
            self._reply(200, payload)
        elif self.path == "/rm":
            self._reply(200, {"score": 1.25})
        elif self.path == "/broken":
            self._reply(200, {"wrong_key": 1})
        elif self.path == "/error":
            self._reply(500, {})
        else:
            self._reply(404, {})

    def _reply(self, status, payload):
        data = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture(scope="module")
def http_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()


class TestHttpClients:
    def test_judge_round_trip(self, http_server):
        client = HttpJudgeClient(http_server + "/judge")
        assert client.complete("format-judge", "hello") == "echo:format-judge:5"

    def test_rm_round_trip(self, http_server):
        client = HttpRmClient(http_server + "/rm")
        assert client.score("q", "r") == 1.25

    def test_http_error_status(self, http_server):
        client = HttpJudgeClient(http_server + "/error")
        with pytest.raises(TransportError):
            client.complete("format-judge", "x")

    def test_malformed_payload(self, http_server):
        client = HttpJudgeClient(http_server + "/broken")
        with pytest.raises(TransportError):
            client.complete("format-judge", "x")
        rm = HttpRmClient(http_server + "/broken")
        with pytest.raises(TransportError):
            rm.score("q", "r")

    def test_connection_refused(self):
        client = HttpRmClient("http://127.0.0.1:9", timeout=0.5)
        with pytest.raises(TransportError):
            client.score("q", "r")

    def test_empty_url_rejected(self):
        with pytest.raises(ValueError):
            HttpJudgeClient("")
