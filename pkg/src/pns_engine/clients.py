"""Judge and reward-model clients: HTTP reference transport plus mocks.

Two tiny interfaces cover every backend interaction:

    JudgeClient.complete(role, prompt) -> reply text
    RmClient.score(query, response)   -> raw scalar

Transport-level problems (connection errors, non-200 status, malformed
payloads) raise TransportError and are never confused with legitimate
scores. Retry wrappers implement bounded exponential backoff around any
client. Mocks are deterministic lookup tables or scripted sequences so
tests and the simulator run fully offline.
"""

from __future__ import annotations

import threading
import time
from typing import Callable, Iterable, Mapping, Protocol

import requests

from .config import RetryPolicy


class TransportError(RuntimeError):
    """A backend could not be reached or returned garbage."""


class MockLookupError(LookupError):
    """A table mock has no entry for the requested key and no default."""


class MockExhaustedError(RuntimeError):
    """A scripted mock ran out of replies."""


class JudgeClient(Protocol):
    def complete(self, role: str, prompt: str) -> str: ...


class RmClient(Protocol):
    def score(self, query: str, response: str) -> float: ...


def score_with_rm(client: RmClient, query: str, response: str) -> float:
    """Raw scalar from the reward model; no clipping or bucketing here."""
    return float(client.score(query, response))


class HttpJudgeClient:
    """POSTs {"role", "prompt"} and expects {"text": "..."} back."""

    def __init__(self, url: str, timeout: float = 30.0, session: requests.Session | None = None):
        if not url:
            raise ValueError("judge URL must be non-empty")
        self.url = url
        self.timeout = timeout
        self._session = session or requests.Session()

    def complete(self, role: str, prompt: str) -> str:
        try:
            resp = self._session.post(
                self.url, json={"role": role, "prompt": prompt}, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise TransportError(f"judge request failed: {exc}") from exc
        if resp.status_code != 200:
            raise TransportError(f"judge returned HTTP {resp.status_code}")
        try:
            payload = resp.json()
            text = payload["text"]
        except (ValueError, KeyError, TypeError) as exc:
            raise TransportError(f"judge returned malformed payload: {exc}") from exc
        if not isinstance(text, str):
            raise TransportError("judge payload 'text' must be a string")
        return text


class HttpRmClient:
    """POSTs {"role": "rm", "query", "response"} and expects {"score": x}."""

    def __init__(self, url: str, timeout: float = 30.0, session: requests.Session | None = None):
        if not url:
            raise ValueError("reward-model URL must be non-empty")
        self.url = url
        self.timeout = timeout
        self._session = session or requests.Session()

    def score(self, query: str, response: str) -> float:
        try:
            resp = self._session.post(
                self.url,
                json={"role": "rm", "query": query, "response": response},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise TransportError(f"reward-model request failed: {exc}") from exc
        if resp.status_code != 200:
            raise TransportError(f"reward model returned HTTP {resp.status_code}")
        try:
            score = resp.json()["score"]
        except (ValueError, KeyError, TypeError) as exc:
            raise TransportError(f"reward model returned malformed payload: {exc}") from exc
        if isinstance(score, bool) or not isinstance(score, (int, float)):
            raise TransportError("reward model payload 'score' must be a number")
        return float(score)


def _retry(policy: RetryPolicy, sleep: Callable[[float], None], fn: Callable[[], object]):
    delay = policy.base_delay
    for attempt in range(policy.attempts):
        try:
            return fn()
        except TransportError:
            if attempt == policy.attempts - 1:
                raise
            sleep(delay)
            delay *= 2.0


class RetryingJudgeClient:
    """Retries TransportError with exponential backoff, then re-raises."""

    def __init__(self, inner: JudgeClient, policy: RetryPolicy | None = None,
                 sleep: Callable[[float], None] = time.sleep):
        self.inner = inner
        self.policy = policy or RetryPolicy()
        self._sleep = sleep

    def complete(self, role: str, prompt: str) -> str:
        return _retry(self.policy, self._sleep, lambda: self.inner.complete(role, prompt))


class RetryingRmClient:
    def __init__(self, inner: RmClient, policy: RetryPolicy | None = None,
                 sleep: Callable[[float], None] = time.sleep):
        self.inner = inner
        self.policy = policy or RetryPolicy()
        self._sleep = sleep

    def score(self, query: str, response: str) -> float:
        return _retry(self.policy, self._sleep, lambda: self.inner.score(query, response))


class TableJudgeMock:
    """Deterministic judge keyed by (role, prompt).

    ``fail_keys`` forces a TransportError for chosen keys, which is how
    tests and offline runs exercise the retry/failure paths. A missing key
    falls back to ``default`` when given (one reply for all roles, or a
    per-role mapping), else raises MockLookupError.
    """

    def __init__(self, table: Mapping[tuple[str, str], str],
                 default: str | Mapping[str, str] | None = None,
                 fail_keys: Iterable[tuple[str, str]] = ()):
        self.table = dict(table)
        self.default = default
        self.fail_keys = set(fail_keys)

    def complete(self, role: str, prompt: str) -> str:
        key = (role, prompt)
        if key in self.fail_keys:
            raise TransportError(f"mock failure injected for role {role!r}")
        if key in self.table:
            return self.table[key]
        if isinstance(self.default, str):
            return self.default
        if self.default is not None and role in self.default:
            return self.default[role]
        raise MockLookupError(f"no mock judge reply for role {role!r}")


class TableRmMock:
    """Deterministic reward model keyed by (query, response).

    Optional gaussian noise (seeded) models a jittery scorer; draws happen
    per call, so with noise enabled the call order matters.
    """

    def __init__(self, table: Mapping[tuple[str, str], float],
                 default: float | None = None,
                 fail_keys: Iterable[tuple[str, str]] = (),
                 noise_std: float = 0.0, seed: int = 0):
        self.table = dict(table)
        self.default = default
        self.fail_keys = set(fail_keys)
        self.noise_std = noise_std
        if noise_std > 0:
            import numpy as np

            self._rng = np.random.default_rng(seed)

    def score(self, query: str, response: str) -> float:
        key = (query, response)
        if key in self.fail_keys:
            raise TransportError("mock failure injected for reward model")
        if key in self.table:
            base = self.table[key]
        elif self.default is not None:
            base = self.default
        else:
            raise MockLookupError("no mock reward-model score for this (query, response)")
        if self.noise_std > 0:
            base += float(self._rng.normal(0.0, self.noise_std))
        return float(base)


class ScriptedJudgeMock:
    """Replays a fixed reply sequence; thread-safe; loud when exhausted."""

    def __init__(self, replies: Iterable[str]):
        self._replies = list(replies)
        self._idx = 0
        self._lock = threading.Lock()

    def complete(self, role: str, prompt: str) -> str:
        with self._lock:
            if self._idx >= len(self._replies):
                raise MockExhaustedError("scripted judge has no replies left")
            reply = self._replies[self._idx]
            self._idx += 1
        return reply


class ScriptedRmMock:
    def __init__(self, scores: Iterable[float]):
        self._scores = list(scores)
        self._idx = 0
        self._lock = threading.Lock()

    def score(self, query: str, response: str) -> float:
        with self._lock:
            if self._idx >= len(self._scores):
                raise MockExhaustedError("scripted reward model has no scores left")
            value = self._scores[self._idx]
            self._idx += 1
        return float(value)
