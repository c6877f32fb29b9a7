"""Model-provider plumbing: an HTTP chat client, a deterministic mock, a
persistent response cache, and text-similarity backends.

Every stage talks to a chat model through the one-method ``complete``
interface, so a pipeline run is replayable by swapping in the mock provider
or layering the disk cache over the live client.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import requests

from .core import FactLensError

logger = logging.getLogger(__name__)

ENV_API_KEY = "FACTLENS_API_KEY"
ENV_API_BASE = "FACTLENS_API_BASE"


class ProviderError(FactLensError):
    """The provider returned an unusable response."""


class TransportError(ProviderError):
    """The provider could not be reached within the retry budget."""


class MockRouteError(ProviderError):
    """The mock provider has no canned response for a prompt."""


class CacheError(FactLensError):
    """The response cache directory cannot be used."""


@dataclass(frozen=True)
class ChatRequest:
    """One chat-completion call: model, prompt and sampling settings."""

    model: str
    prompt: str
    temperature: float = 0.0
    max_tokens: int = 1024

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not self.prompt:
            raise ValueError("prompt must be non-empty")


@dataclass(frozen=True)
class ProviderConfig:
    """Connection settings for the HTTP chat provider."""

    api_base: str
    api_key: str = ""
    timeout_seconds: int = 60
    max_retries: int = 3
    requests_per_minute: int = 0  # 0 = uncapped
    max_parallel: int = 4
    route: str = "/v1/chat/completions"

    def __post_init__(self) -> None:
        if not self.api_base:
            raise ValueError("api_base must be set")
        if self.timeout_seconds <= 0:
            raise ValueError("timeout_seconds must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if self.max_parallel < 1:
            raise ValueError("max_parallel must be >= 1")

    @classmethod
    def from_env(cls, **overrides) -> "ProviderConfig":
        """Build a config from FACTLENS_API_BASE / FACTLENS_API_KEY."""
        values = {
            "api_base": os.environ.get(ENV_API_BASE, ""),
            "api_key": os.environ.get(ENV_API_KEY, ""),
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


class HttpChatProvider:
    """Chat-completion client for an OpenAI-style HTTP endpoint.

    Retries transient failures (connection errors, timeouts, HTTP 408/429/5xx)
    with exponential backoff, enforces the requests-per-minute cap, and bounds
    in-flight parallelism with a semaphore, so instances are safe to share
    across worker threads.
    """

    RETRYABLE_STATUS = frozenset({408, 429, 500, 502, 503, 504})
    BACKOFF_BASE_SECONDS = 0.5

    def __init__(
        self,
        config: ProviderConfig,
        session: requests.Session | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.config = config
        self._session = session or requests.Session()
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(config.max_parallel)
        self._rate_lock = threading.Lock()
        self._next_allowed = 0.0

    @property
    def provider_id(self) -> str:
        return f"http:{self.config.api_base}"

    def complete(self, request: ChatRequest) -> str:
        url = self.config.api_base.rstrip("/") + self.config.route
        payload = {
            "model": request.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"

        with self._slots:
            for attempt in range(self.config.max_retries + 1):
                final = attempt == self.config.max_retries
                self._respect_rate_cap()
                try:
                    response = self._session.post(
                        url, json=payload, headers=headers, timeout=self.config.timeout_seconds
                    )
                except requests.RequestException as exc:
                    if final:
                        raise TransportError(
                            f"request failed after {attempt + 1} attempt(s): {exc}"
                        ) from exc
                    self._backoff(attempt)
                    continue
                if response.status_code in self.RETRYABLE_STATUS and not final:
                    self._backoff(attempt)
                    continue
                if not 200 <= response.status_code < 300:
                    raise ProviderError(
                        f"provider returned HTTP {response.status_code}: {response.text[:200]}"
                    )
                text = self._extract_text(response)
                if not text:
                    raise ProviderError("provider returned an empty response")
                return text
        raise TransportError("retry loop exhausted")  # pragma: no cover

    @staticmethod
    def _extract_text(response: requests.Response) -> str:
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed provider response: {exc}") from exc

    def _respect_rate_cap(self) -> None:
        if self.config.requests_per_minute <= 0:
            return
        interval = 60.0 / self.config.requests_per_minute
        with self._rate_lock:
            now = time.monotonic()
            wait = self._next_allowed - now
            self._next_allowed = max(now, self._next_allowed) + interval
        if wait > 0:
            self._sleep(wait)

    def _backoff(self, attempt: int) -> None:
        self._sleep(self.BACKOFF_BASE_SECONDS * (2**attempt))


class MockChatProvider:
    """Canned-response provider for offline runs and tests.

    Exact prompt registrations win first; unless ``strict``, the first
    registered route whose key is a substring of the prompt wins next, in
    registration order. An unmatched prompt always raises: a mock cannot
    invent text. Call counts per model are kept for assertions.
    """

    provider_id = "mock"

    def __init__(self, strict: bool = False) -> None:
        self.strict = strict
        self._exact: dict[str, str] = {}
        self._routes: list[tuple[str, str]] = []
        self._lock = threading.Lock()
        self.calls_by_model: Counter[str] = Counter()

    def register(self, prompt: str, response: str) -> None:
        """Register an exact-prompt canned response."""
        self._exact[prompt] = response

    def register_route(self, contains: str, response: str) -> None:
        """Register a substring route; earlier registrations take priority."""
        self._routes.append((contains, response))

    def complete(self, request: ChatRequest) -> str:
        with self._lock:
            self.calls_by_model[request.model] += 1
        hit = self._exact.get(request.prompt)
        if hit is not None:
            return hit
        if not self.strict:
            for key, response in self._routes:
                if key in request.prompt:
                    return response
        raise MockRouteError(f"no canned response for prompt: {request.prompt[:160]!r}")

    @property
    def call_count(self) -> int:
        with self._lock:
            return sum(self.calls_by_model.values())

    def calls_for(self, model: str) -> int:
        with self._lock:
            return self.calls_by_model[model]

    @classmethod
    def from_fixture_file(cls, path: str | Path) -> "MockChatProvider":
        """Load a canned route table: {"strict", "exact", "routes"} JSON."""
        try:
            data = json.loads(Path(path).read_text("utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ProviderError(f"cannot load mock fixtures from {path}: {exc}") from exc
        provider = cls(strict=bool(data.get("strict", False)))
        for prompt, response in data.get("exact", {}).items():
            provider.register(prompt, response)
        for contains, response in data.get("routes", []):
            provider.register_route(contains, response)
        return provider


class ResponseCache:
    """Disk cache of provider responses, one file per request key.

    Layout: ``<cache_dir>/<first two hex chars>/<key>.txt`` holding the raw
    response text. Writes go through a temp file and an atomic rename, so
    concurrent writers of one key are safe (last writer wins; at temperature
    0 both write identical content). Unreadable or empty entries count as
    misses and are rewritten.
    """

    def __init__(self, cache_dir: str | Path) -> None:
        self.cache_dir = Path(cache_dir)
        try:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise CacheError(f"cache directory {self.cache_dir} is not usable: {exc}") from exc

    @staticmethod
    def key_for(provider_id: str, request: ChatRequest) -> str:
        """Deterministic key over (provider id, model, temperature, prompt)."""
        material = json.dumps(
            [provider_id, request.model, float(request.temperature), request.prompt],
            ensure_ascii=False,
        )
        return hashlib.sha256(material.encode("utf-8")).hexdigest()

    def _path(self, key: str) -> Path:
        return self.cache_dir / key[:2] / f"{key}.txt"

    def get(self, key: str) -> str | None:
        path = self._path(key)
        try:
            value = path.read_text("utf-8")
        except FileNotFoundError:
            return None
        except (OSError, UnicodeDecodeError) as exc:
            logger.warning("unreadable cache entry %s (%s); treating as miss", path, exc)
            return None
        if not value:
            logger.warning("empty cache entry %s; treating as miss", path)
            return None
        return value

    def put(self, key: str, value: str) -> None:
        path = self._path(key)
        tmp = path.with_name(f"{path.name}.{os.getpid()}.{threading.get_ident()}.tmp")
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp.write_text(value, "utf-8")
            os.replace(tmp, path)
        except OSError as exc:
            raise CacheError(f"cannot write cache entry {path}: {exc}") from exc

    def cached(self, provider_id: str, request: ChatRequest, compute: Callable[[], str]) -> str:
        """Return the stored value on a key hit; otherwise compute and store."""
        key = self.key_for(provider_id, request)
        hit = self.get(key)
        if hit is not None:
            return hit
        value = compute()
        self.put(key, value)
        return value


class CachedChatProvider:
    """Wraps a provider with the disk cache; equal requests hit upstream once."""

    def __init__(self, inner, cache: ResponseCache) -> None:
        self._inner = inner
        self._cache = cache

    @property
    def provider_id(self) -> str:
        return self._inner.provider_id

    def complete(self, request: ChatRequest) -> str:
        return self._cache.cached(
            self._inner.provider_id, request, lambda: self._inner.complete(request)
        )


class CountingProvider:
    """Pass-through wrapper counting the requests issued through it."""

    def __init__(self, inner) -> None:
        self._inner = inner
        self._lock = threading.Lock()
        self.calls = 0

    @property
    def provider_id(self) -> str:
        return self._inner.provider_id

    def complete(self, request: ChatRequest) -> str:
        with self._lock:
            self.calls += 1
        return self._inner.complete(request)


_TOKEN_RE = re.compile(r"[a-z0-9]+")


def token_overlap_similarity(a: str, b: str) -> float:
    """Token-level F1 between two texts, the deterministic offline backend.

    Tokens are lowercased alphanumeric runs (punctuation stripped). The score
    is symmetric, 1.0 on identical inputs, and 0.0 when no tokens are shared.
    """
    if not a or not b:
        raise ValueError("similarity inputs must be non-empty")
    if a == b:
        return 1.0
    tokens_a = Counter(_TOKEN_RE.findall(a.lower()))
    tokens_b = Counter(_TOKEN_RE.findall(b.lower()))
    total_a = sum(tokens_a.values())
    total_b = sum(tokens_b.values())
    if total_a == 0 or total_b == 0:
        return 0.0
    common = sum((tokens_a & tokens_b).values())
    if common == 0:
        return 0.0
    precision = common / total_a
    recall = common / total_b
    return 2 * precision * recall / (precision + recall)


class EmbeddingSimilarity:
    """Cosine similarity over an embedding callable, mapped to [0, 1].

    The raw cosine in [-1, 1] is rescaled as (1 + cos) / 2 so all backends
    share one range.
    """

    def __init__(self, embed: Callable[[str], Sequence[float]]) -> None:
        self._embed = embed

    def __call__(self, a: str, b: str) -> float:
        if not a or not b:
            raise ValueError("similarity inputs must be non-empty")
        va = self._embed(a)
        vb = self._embed(b)
        dot = sum(x * y for x, y in zip(va, vb))
        norm_a = sum(x * x for x in va) ** 0.5
        norm_b = sum(y * y for y in vb) ** 0.5
        cos = 0.0 if norm_a == 0 or norm_b == 0 else dot / (norm_a * norm_b)
        cos = max(-1.0, min(1.0, cos))
        return (1.0 + cos) / 2.0
