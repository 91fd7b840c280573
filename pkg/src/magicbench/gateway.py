"""Chat-completion gateway with retries, rate limiting and a record/replay fixture store.

Every remote model call in the package goes through :class:`ChatGateway`. In replay
mode no HTTP client is ever constructed, so games run without network access.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import os
import re
import tempfile
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Mapping

import httpx

from .core import MagicError

log = logging.getLogger(__name__)

ENV_BASE = "MAGIC_API_BASE"
ENV_KEY = "MAGIC_API_KEY"


class Mode(str, enum.Enum):
    LIVE = "live"
    RECORD = "record"
    REPLAY = "replay"


class GatewayError(MagicError):
    pass


class FixtureMiss(GatewayError):
    def __init__(self, fingerprint: str, model: str):
        super().__init__(f"no replay fixture for model {model!r}, fingerprint {fingerprint}")
        self.fingerprint = fingerprint
        self.model = model


class AuthError(GatewayError):
    pass


class RateLimited(GatewayError):
    pass


class GatewayTimeout(GatewayError):
    pass


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[tuple[str, str], ...]  # (role, content)
    temperature: float = 0.0
    max_tokens: int = 512

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("a chat request needs at least one message")
        for role, _ in self.messages:
            if role not in ("system", "user", "assistant"):
                raise ValueError(f"bad message role {role!r}")

    def payload(self) -> dict[str, Any]:
        return {
            "model": self.model,
            "messages": [{"role": r, "content": c} for r, c in self.messages],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }

    @property
    def fingerprint(self) -> str:
        blob = json.dumps(self.payload(), sort_keys=True, separators=(",", ":"), ensure_ascii=True)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def model_slug(model: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", model)


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


class FixtureStore:
    """Responses on disk as ``<root>/<model>/<fingerprint>.txt`` plus ``index.json``."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._lock = threading.Lock()
        self._index: dict[str, Any] | None = None

    def path_for(self, request: ChatRequest) -> Path:
        return self.root / model_slug(request.model) / f"{request.fingerprint}.txt"

    def get(self, request: ChatRequest) -> str | None:
        path = self.path_for(request)
        if not path.is_file():
            return None
        return path.read_text(encoding="utf-8")

    def put(self, request: ChatRequest, response: str) -> None:
        path = self.path_for(request)
        with self._lock:
            _atomic_write(path, response)
            if self._index is None:
                self._index = self.index()
            index = self._index
            if request.fingerprint in index:
                return
            index[request.fingerprint] = {
                "file": path.relative_to(self.root).as_posix(),
                "model": request.model,
                "created_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            }
            _atomic_write(self.root / "index.json", json.dumps(index, indent=2, sort_keys=True) + "\n")

    def index(self) -> dict[str, Any]:
        path = self.root / "index.json"
        if not path.is_file():
            return {}
        return json.loads(path.read_text(encoding="utf-8"))


class RateLimiter:
    """Caps concurrent requests and starts per rolling minute.

    ``clock`` and ``sleep`` are injectable so tests can drive it with a fake clock.
    """

    def __init__(
        self,
        max_in_flight: int = 4,
        requests_per_minute: int | None = None,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be >= 1")
        self.max_in_flight = max_in_flight
        self.rpm = requests_per_minute
        self._clock = clock
        self._sleep = sleep
        self._cond = threading.Condition()
        self._in_flight = 0
        self._starts: deque[float] = deque()
        self.peak_in_flight = 0

    @property
    def in_flight(self) -> int:
        return self._in_flight

    def acquire(self) -> None:
        while True:
            with self._cond:
                while self._in_flight >= self.max_in_flight:
                    self._cond.wait()
                wait = 0.0
                if self.rpm:
                    now = self._clock()
                    while self._starts and now - self._starts[0] >= 60.0:
                        self._starts.popleft()
                    if len(self._starts) >= self.rpm:
                        wait = 60.0 - (now - self._starts[0])
                if wait <= 0:
                    self._in_flight += 1
                    self.peak_in_flight = max(self.peak_in_flight, self._in_flight)
                    if self.rpm:
                        self._starts.append(self._clock())
                    return
            self._sleep(wait)

    def release(self) -> None:
        with self._cond:
            self._in_flight -= 1
            self._cond.notify()

    def __enter__(self) -> RateLimiter:
        self.acquire()
        return self

    def __exit__(self, *exc: Any) -> None:
        self.release()


_TRANSIENT_STATUS = {408, 409, 429, 500, 502, 503, 504}


@dataclass
class ChatGateway:
    mode: Mode = Mode.REPLAY
    store: FixtureStore | None = None
    limiter: RateLimiter = field(default_factory=RateLimiter)
    env: Mapping[str, str] = field(default_factory=lambda: os.environ)
    max_attempts: int = 5
    backoff_base: float = 1.0
    backoff_factor: float = 2.0
    timeout: float = 120.0
    sleep: Callable[[float], None] = time.sleep
    transport: httpx.BaseTransport | None = None

    def __post_init__(self) -> None:
        self.mode = Mode(self.mode)
        if self.mode is not Mode.LIVE and self.store is None:
            raise ValueError(f"{self.mode.value} mode needs a fixture store")
        self._client: httpx.Client | None = None
        self._client_lock = threading.Lock()
        self.network_calls = 0

    def chat(self, request: ChatRequest) -> str:
        if self.mode is Mode.REPLAY:
            assert self.store is not None
            text = self.store.get(request)
            if text is None:
                raise FixtureMiss(request.fingerprint, request.model)
            return text
        text = self._call_with_retries(request)
        if self.mode is Mode.RECORD:
            assert self.store is not None
            self.store.put(request, text)
        return text

    def close(self) -> None:
        if self._client is not None:
            self._client.close()
            self._client = None

    def endpoint(self, model: str) -> tuple[str, str]:
        key = re.sub(r"[^A-Z0-9]", "_", model.upper())
        base = self.env.get(f"{ENV_BASE}_{key}") or self.env.get(ENV_BASE)
        api_key = self.env.get(ENV_KEY)
        if not base:
            raise AuthError(f"set {ENV_BASE} (or {ENV_BASE}_{key}) to reach model {model!r}")
        if not api_key:
            raise AuthError(f"set {ENV_KEY} to reach model {model!r}")
        return base.rstrip("/"), api_key

    def _http(self) -> httpx.Client:
        with self._client_lock:
            if self._client is None:
                self._client = httpx.Client(timeout=self.timeout, transport=self.transport)
            return self._client

    def _call_with_retries(self, request: ChatRequest) -> str:
        base, api_key = self.endpoint(request.model)
        last: Exception | None = None
        for attempt in range(self.max_attempts):
            if attempt:
                delay = self.backoff_base * self.backoff_factor ** (attempt - 1)
                log.warning("retrying %s in %.1fs after %s", request.model, delay, last)
                self.sleep(delay)
            try:
                with self.limiter:
                    self.network_calls += 1
                    resp = self._http().post(
                        f"{base}/chat/completions",
                        json=request.payload(),
                        headers={"Authorization": f"Bearer {api_key}"},
                    )
            except httpx.TimeoutException as exc:
                last = GatewayTimeout(str(exc) or "request timed out")
                continue
            except httpx.TransportError as exc:
                last = GatewayError(f"transport error: {exc}")
                continue
            if resp.status_code in (401, 403):
                raise AuthError(f"{resp.status_code} from {base}")
            if resp.status_code == 429:
                last = RateLimited(f"429 from {base}")
                continue
            if resp.status_code in _TRANSIENT_STATUS:
                last = GatewayError(f"{resp.status_code} from {base}")
                continue
            if resp.status_code >= 400:
                raise GatewayError(f"{resp.status_code} from {base}: {resp.text[:200]}")
            try:
                return resp.json()["choices"][0]["message"]["content"] or ""
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise GatewayError(f"malformed response from {base}: {exc}") from exc
        assert last is not None
        raise last
