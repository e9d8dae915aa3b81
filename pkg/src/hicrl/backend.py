"""Text-completion providers.

Every provider exposes ``bind(scenario_id, episode_index)`` which returns an
object with ``complete(request) -> CompletionResponse``. The HTTP client
ignores the binding; the scripted provider uses it to pick the response
list recorded for that episode.
"""

from __future__ import annotations

import json
import logging
import os
import socket
import threading
import time
import urllib.error
import urllib.request
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Protocol

from .errors import AuthError, BackendError, BudgetError, FixtureExhausted, TransportError

log = logging.getLogger(__name__)

ROLE_HINTS = ("goal", "think", "action", "finish", "reflect_low", "reflect_high", "reflect_full")
DEFAULT_STOP = ("\n[",)
DEFAULT_MAX_TOKENS = {
    "goal": 128,
    "think": 128,
    "action": 128,
    "finish": 128,
    "reflect_low": 96,
    "reflect_high": 96,
    "reflect_full": 96,
}
API_KEY_ENV = "HICRL_API_KEY"
BASE_URL_ENV = "HICRL_BASE_URL"


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    role_hint: str = "think"
    stop_sequences: tuple[str, ...] = DEFAULT_STOP
    max_tokens: int | None = None
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if not self.prompt or not self.prompt.strip():
            raise ValueError("completion prompt must be non-empty")
        if self.role_hint not in ROLE_HINTS:
            raise ValueError(f"unknown role_hint {self.role_hint!r}")
        object.__setattr__(self, "stop_sequences", tuple(self.stop_sequences))
        if not self.stop_sequences:
            raise ValueError("stop_sequences must be non-empty")
        if self.max_tokens is None:
            object.__setattr__(self, "max_tokens", DEFAULT_MAX_TOKENS[self.role_hint])
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    prompt_tokens: int = 0
    completion_tokens: int = 0
    provider: str = ""


class Completer(Protocol):
    def complete(self, request: CompletionRequest) -> CompletionResponse: ...


class Backend(Protocol):
    def bind(self, scenario_id: str, episode_index: int) -> Completer: ...


def strip_stop(text: str, stops: Iterable[str]) -> str:
    cut = len(text)
    for stop in stops:
        i = text.find(stop)
        if i != -1:
            cut = min(cut, i)
    return text[:cut]


def _rough_tokens(text: str) -> int:
    return len(text.split())


# -- live HTTP client ---------------------------------------------------------

class RateLimiter:
    """Spaces calls at least ``60 / requests_per_minute`` seconds apart."""

    def __init__(self, requests_per_minute: float, clock=time.monotonic, sleep=time.sleep):
        self.interval = 60.0 / requests_per_minute if requests_per_minute else 0.0
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next = 0.0

    def acquire(self) -> None:
        with self._lock:
            now = self._clock()
            wait = self._next - now
            self._next = max(now, self._next) + self.interval
        if wait > 0:
            self._sleep(wait)


_CONTEXT_MARKERS = ("context_length", "context length", "maximum context", "too many tokens", "prompt is too long")


class HttpBackend:
    """Client for OpenAI-compatible ``/chat/completions`` or ``/completions``.

    Safe to share between threads; all callers go through one rate limiter.
    """

    provider = "http"

    def __init__(
        self,
        model: str,
        base_url: str | None = None,
        api_key: str | None = None,
        *,
        endpoint: str = "chat",
        timeout: float = 60.0,
        max_retries: int = 5,
        backoff_base: float = 1.0,
        backoff_cap: float = 30.0,
        requests_per_minute: float = 60.0,
        max_context_chars: int | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if endpoint not in ("chat", "completions"):
            raise ValueError("endpoint must be 'chat' or 'completions'")
        self.model = model
        self.base_url = (base_url or os.environ.get(BASE_URL_ENV) or "https://api.openai.com/v1").rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        if not self.api_key:
            raise AuthError(f"no API key: set {API_KEY_ENV}")
        self.endpoint = endpoint
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.backoff_cap = backoff_cap
        self.max_context_chars = max_context_chars
        self._sleep = sleep
        self.limiter = RateLimiter(requests_per_minute, sleep=sleep)

    def bind(self, scenario_id: str, episode_index: int) -> HttpBackend:
        return self

    def _payload(self, request: CompletionRequest) -> tuple[str, dict[str, Any]]:
        body: dict[str, Any] = {
            "model": self.model,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
            "stop": list(request.stop_sequences),
        }
        if self.endpoint == "chat":
            body["messages"] = [{"role": "user", "content": request.prompt}]
            return f"{self.base_url}/chat/completions", body
        body["prompt"] = request.prompt
        return f"{self.base_url}/completions", body

    def _post(self, url: str, body: dict[str, Any]) -> dict[str, Any]:
        data = json.dumps(body).encode("utf-8")
        req = urllib.request.Request(
            url,
            data=data,
            method="POST",
            headers={"Content-Type": "application/json", "Authorization": f"Bearer {self.api_key}"},
        )
        with urllib.request.urlopen(req, timeout=self.timeout) as resp:
            return json.loads(resp.read().decode("utf-8"))

    def _delay(self, attempt: int, retry_after: str | None) -> float:
        if retry_after:
            try:
                return min(self.backoff_cap, float(retry_after))
            except ValueError:
                pass
        return min(self.backoff_cap, self.backoff_base * (2 ** attempt))

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        if self.max_context_chars is not None and len(request.prompt) > self.max_context_chars:
            raise BudgetError(f"prompt of {len(request.prompt)} chars exceeds {self.max_context_chars}")
        url, body = self._payload(request)
        last: str = ""
        for attempt in range(self.max_retries + 1):
            self.limiter.acquire()
            retry_after = None
            try:
                payload = self._post(url, body)
                return self._parse(payload, request)
            except urllib.error.HTTPError as exc:
                detail = exc.read().decode("utf-8", "replace") if exc.fp else ""
                if exc.code in (401, 403):
                    raise AuthError(f"HTTP {exc.code}: {detail[:200]}") from exc
                if exc.code in (400, 413) and any(m in detail.lower() for m in _CONTEXT_MARKERS):
                    raise BudgetError(f"HTTP {exc.code}: {detail[:200]}") from exc
                if exc.code != 429 and exc.code < 500:
                    raise BackendError(f"HTTP {exc.code}: {detail[:200]}") from exc
                retry_after = exc.headers.get("Retry-After") if exc.headers else None
                last = f"HTTP {exc.code}"
            except (urllib.error.URLError, socket.timeout, TimeoutError, ConnectionError) as exc:
                last = f"{type(exc).__name__}: {exc}"
            if attempt < self.max_retries:
                delay = self._delay(attempt, retry_after)
                log.warning("transient backend failure (%s); retry %d in %.1fs", last, attempt + 1, delay)
                self._sleep(delay)
        raise TransportError(f"gave up after {self.max_retries + 1} attempts: {last}")

    def _parse(self, payload: dict[str, Any], request: CompletionRequest) -> CompletionResponse:
        try:
            choice = payload["choices"][0]
            text = choice["message"]["content"] if self.endpoint == "chat" else choice["text"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"malformed completion payload: {str(payload)[:200]}") from exc
        usage = payload.get("usage") or {}
        return CompletionResponse(
            text=strip_stop(text or "", request.stop_sequences),
            prompt_tokens=int(usage.get("prompt_tokens", 0)),
            completion_tokens=int(usage.get("completion_tokens", 0)),
            provider=f"http:{self.model}",
        )


# -- scripted playback --------------------------------------------------------

@dataclass
class ScriptedSession:
    """Playback cursor over the responses recorded for one episode."""

    scenario_id: str
    episode_index: int
    responses: list[str]
    cursor: int = 0
    requests: list[CompletionRequest] = field(default_factory=list)

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        return scripted_complete(self, request)


def scripted_complete(session: ScriptedSession, request: CompletionRequest) -> CompletionResponse:
    if session.cursor >= len(session.responses):
        raise FixtureExhausted(
            f"fixture for {session.scenario_id} episode {session.episode_index} has only "
            f"{len(session.responses)} responses; call #{session.cursor + 1} ({request.role_hint})"
        )
    text = session.responses[session.cursor]
    session.cursor += 1
    session.requests.append(request)
    text = strip_stop(text, request.stop_sequences)
    return CompletionResponse(text, _rough_tokens(request.prompt), _rough_tokens(text), "scripted")


class ScriptedBackend:
    """Replays fixture responses in call order per (scenario, episode)."""

    provider = "scripted"

    def __init__(self, responses: dict[tuple[str, int], list[str]] | None = None):
        self.responses = {k: list(v) for k, v in (responses or {}).items()}

    @classmethod
    def from_records(cls, records: Iterable[dict[str, Any]]) -> ScriptedBackend:
        grouped: dict[tuple[str, int], list[tuple[int, str]]] = defaultdict(list)
        for rec in records:
            grouped[(rec["scenario"], int(rec["episode"]))].append((int(rec["seq"]), rec["text"]))
        out = {}
        for key, items in grouped.items():
            items.sort()
            seqs = [s for s, _ in items]
            if len(set(seqs)) != len(seqs):
                raise ValueError(f"duplicate seq numbers in fixture for {key}")
            out[key] = [t for _, t in items]
        return cls(out)

    @classmethod
    def from_jsonl(cls, path: str | Path) -> ScriptedBackend:
        with open(path, encoding="utf-8") as fh:
            return cls.from_records(json.loads(line) for line in fh if line.strip())

    def bind(self, scenario_id: str, episode_index: int) -> ScriptedSession:
        return ScriptedSession(scenario_id, episode_index, self.responses.get((scenario_id, episode_index), []))


def fixture_records(responses: dict[tuple[str, int], list[str]]) -> list[dict[str, Any]]:
    return [
        {"scenario": sid, "episode": ep, "seq": i, "text": text}
        for (sid, ep), texts in sorted(responses.items())
        for i, text in enumerate(texts)
    ]


def write_fixture(path: str | Path, responses: dict[tuple[str, int], list[str]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in fixture_records(responses):
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


class FunctionBackend:
    """Adapts a plain ``fn(request) -> str`` into a backend."""

    provider = "function"

    def __init__(self, fn: Callable[[CompletionRequest], str]):
        self.fn = fn

    def bind(self, scenario_id: str, episode_index: int) -> FunctionBackend:
        return self

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        text = strip_stop(self.fn(request), request.stop_sequences)
        return CompletionResponse(text, _rough_tokens(request.prompt), _rough_tokens(text), self.provider)


# -- recording wrapper --------------------------------------------------------

@dataclass(frozen=True)
class CallRecord:
    scenario_id: str
    episode_index: int
    seq: int
    request: CompletionRequest
    response: CompletionResponse


class RecordingBackend:
    """Wraps another backend and keeps every request/response pair.

    The captured responses can be written back out as a scripted fixture,
    which is how live runs become offline golden tests.
    """

    def __init__(self, inner: Backend):
        self.inner = inner
        self.calls: list[CallRecord] = []
        self._lock = threading.Lock()
        self._seq: dict[tuple[str, int], int] = defaultdict(int)

    def bind(self, scenario_id: str, episode_index: int) -> _RecordingSession:
        with self._lock:
            # a re-bound episode starts over, mirroring scripted playback
            self._seq[(scenario_id, episode_index)] = 0
            self.calls = [c for c in self.calls if (c.scenario_id, c.episode_index) != (scenario_id, episode_index)]
        return _RecordingSession(self, scenario_id, episode_index, self.inner.bind(scenario_id, episode_index))

    def _record(self, scenario_id: str, episode_index: int, request, response) -> None:
        with self._lock:
            key = (scenario_id, episode_index)
            self.calls.append(CallRecord(scenario_id, episode_index, self._seq[key], request, response))
            self._seq[key] += 1

    def requests_for(self, role_hint: str | None = None) -> list[CompletionRequest]:
        return [c.request for c in self.calls if role_hint is None or c.request.role_hint == role_hint]

    def responses(self) -> dict[tuple[str, int], list[str]]:
        out: dict[tuple[str, int], list[str]] = defaultdict(list)
        for c in sorted(self.calls, key=lambda c: (c.scenario_id, c.episode_index, c.seq)):
            out[(c.scenario_id, c.episode_index)].append(c.response.text)
        return dict(out)

    def write_fixture(self, path: str | Path) -> None:
        write_fixture(path, self.responses())


@dataclass
class _RecordingSession:
    owner: RecordingBackend
    scenario_id: str
    episode_index: int
    inner: Completer

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        response = self.inner.complete(request)
        self.owner._record(self.scenario_id, self.episode_index, request, response)
        return response
