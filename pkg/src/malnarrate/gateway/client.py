"""OpenAI-compatible chat-completion and embeddings client."""

from __future__ import annotations

import logging
import math
import os
import random
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import httpx

logger = logging.getLogger(__name__)

QUANTIZATION_HINTS = ("none", "int4_fp16")
DEFAULT_API_KEY_ENV = "MALNARRATE_API_KEY"
CHAT_PATH = "/v1/chat/completions"
EMBEDDINGS_PATH = "/v1/embeddings"


class GatewayError(RuntimeError):
    """Base class for endpoint failures."""


class InvalidInput(GatewayError, ValueError):
    """The request was rejected client-side before any wire call."""


class EndpointUnreachable(GatewayError):
    """Could not connect to the endpoint; check the URL and network."""


class AuthFailed(GatewayError):
    """The endpoint rejected the credentials; check the API key."""


class ContextOverflow(GatewayError):
    """The endpoint reported the prompt exceeds its context window; lower the token budget."""


class RetriesExhausted(GatewayError):
    """Transient failures persisted through every attempt."""

    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


class BadResponse(GatewayError):
    """The endpoint answered with a payload that does not fit the wire contract."""


@dataclass(frozen=True)
class ModelProfile:
    model_name: str
    endpoint_url: str
    api_key: str | None = field(default=None, repr=False)
    quantization_hint: str | None = None
    max_output_tokens: int = 1024
    temperature: float = 0.2
    api_key_env: str = DEFAULT_API_KEY_ENV

    def __post_init__(self) -> None:
        if not self.model_name:
            raise ValueError("model_name must be non-empty")
        if not self.endpoint_url:
            raise ValueError("endpoint_url must be non-empty")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be > 0")
        if not 0 <= self.temperature <= 2:
            raise ValueError("temperature must lie in [0, 2]")
        if self.quantization_hint is not None and self.quantization_hint not in QUANTIZATION_HINTS:
            raise ValueError(f"quantization_hint must be one of {QUANTIZATION_HINTS}")

    def resolved_api_key(self) -> str | None:
        return os.environ.get(self.api_key_env) or self.api_key

    def public_dict(self) -> dict[str, Any]:
        """Configuration fields safe to persist (no secrets)."""
        return {
            "model_name": self.model_name,
            "endpoint_url": self.endpoint_url,
            "quantization_hint": self.quantization_hint,
            "max_output_tokens": self.max_output_tokens,
            "temperature": self.temperature,
        }


@dataclass(frozen=True)
class ChatExchange:
    system_prompt: str
    user_prompt: str
    completion_text: str
    usage_tokens: tuple[int, int] | None = None
    latency_ms: int = 0
    attempts: int = 1


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("embedding must have a positive dimension")
        if not all(math.isfinite(v) for v in self.values):
            raise ValueError("embedding values must be finite")

    @property
    def dimension(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    backoff_base: float = 0.5
    jitter: float = 0.2

    def delay(self, attempt: int, rng: random.Random) -> float:
        """Seconds to wait after failed attempt number ``attempt`` (1-based)."""
        base = self.backoff_base * (2 ** (attempt - 1))
        return max(0.0, base * (1 + rng.uniform(-self.jitter, self.jitter)))


_CONTEXT_MARKERS = ("context_length_exceeded", "context length", "maximum context", "context window")


def _is_context_overflow(response: httpx.Response) -> bool:
    if response.status_code not in (400, 413):
        return False
    text = response.text.lower()
    return any(marker in text for marker in _CONTEXT_MARKERS)


class Gateway:
    """Talks to OpenAI-compatible endpoints.

    One instance may be shared across worker threads; at most
    ``max_in_flight`` requests are on the wire at once.
    """

    def __init__(
        self,
        *,
        timeout: float = 60.0,
        retry: RetryPolicy | None = None,
        max_in_flight: int = 4,
        embed_batch_size: int = 128,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
        seed: int | None = None,
    ):
        if timeout <= 0:
            raise ValueError("timeout must be > 0")
        if max_in_flight < 1 or embed_batch_size < 1:
            raise ValueError("max_in_flight and embed_batch_size must be >= 1")
        self.retry = retry or RetryPolicy()
        self.embed_batch_size = embed_batch_size
        self._sleep = sleep
        self._rng = random.Random(seed)
        self._slots = threading.BoundedSemaphore(max_in_flight)
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def close(self) -> None:
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _post(self, profile: ModelProfile, path: str, body: dict) -> tuple[dict, int, int]:
        url = profile.endpoint_url.rstrip("/") + path
        headers = {"Content-Type": "application/json"}
        key = profile.resolved_api_key()
        if key:
            headers["Authorization"] = f"Bearer {key}"

        started = time.perf_counter()
        last_problem = ""
        unreachable = True
        for attempt in range(1, self.retry.max_attempts + 1):
            try:
                with self._slots:
                    response = self._client.post(url, json=body, headers=headers)
            except httpx.TimeoutException:
                unreachable = False
                last_problem = "timeout"
            except httpx.TransportError as exc:
                last_problem = f"transport error: {type(exc).__name__}"
            else:
                status = response.status_code
                if status < 300:
                    try:
                        payload = response.json()
                    except ValueError:
                        raise BadResponse(f"{url} returned non-JSON body") from None
                    latency = int(round((time.perf_counter() - started) * 1000))
                    return payload, attempt, latency
                if status in (401, 403):
                    raise AuthFailed(f"{url} rejected credentials (HTTP {status})")
                if _is_context_overflow(response):
                    raise ContextOverflow(f"{url}: {response.text[:300]}")
                if status != 429 and status < 500:
                    raise GatewayError(f"{url} returned HTTP {status}: {response.text[:300]}")
                unreachable = False
                last_problem = f"HTTP {status}"

            if attempt < self.retry.max_attempts:
                wait = self.retry.delay(attempt, self._rng)
                logger.warning("%s attempt %d failed (%s); retrying in %.2fs", url, attempt, last_problem, wait)
                self._sleep(wait)

        if unreachable:
            raise EndpointUnreachable(f"{url} unreachable after {self.retry.max_attempts} attempts ({last_problem})")
        raise RetriesExhausted(
            f"{url} failed after {self.retry.max_attempts} attempts (last: {last_problem})",
            attempts=self.retry.max_attempts,
        )

    def complete(self, profile: ModelProfile, system_prompt: str, user_prompt: str) -> ChatExchange:
        if not system_prompt or not user_prompt:
            raise InvalidInput("system and user prompts must be non-empty")
        body = {
            "model": profile.model_name,
            "messages": [
                {"role": "system", "content": system_prompt},
                {"role": "user", "content": user_prompt},
            ],
            "temperature": profile.temperature,
            "max_tokens": profile.max_output_tokens,
        }
        payload, attempts, latency = self._post(profile, CHAT_PATH, body)
        try:
            text = payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise BadResponse("chat response lacks choices[0].message.content") from None
        if not isinstance(text, str):
            raise BadResponse("chat completion content is not a string")
        usage = payload.get("usage") or None
        usage_tokens = None
        if isinstance(usage, dict) and "prompt_tokens" in usage and "completion_tokens" in usage:
            usage_tokens = (int(usage["prompt_tokens"]), int(usage["completion_tokens"]))
        return ChatExchange(system_prompt, user_prompt, text, usage_tokens, latency, attempts)

    def _embed(self, profile: ModelProfile, inputs: str | list[str], expected: int) -> list[EmbeddingVector]:
        payload, _, _ = self._post(profile, EMBEDDINGS_PATH, {"model": profile.model_name, "input": inputs})
        data = payload.get("data") if isinstance(payload, dict) else None
        if not isinstance(data, list) or len(data) != expected:
            raise BadResponse(f"embeddings response must carry {expected} items")
        if all(isinstance(d, dict) and "index" in d for d in data):
            data = sorted(data, key=lambda d: d["index"])
        try:
            return [EmbeddingVector(tuple(float(v) for v in d["embedding"])) for d in data]
        except (KeyError, TypeError, ValueError) as exc:
            raise BadResponse(f"malformed embedding item: {exc}") from None

    def embed_tokens(self, profile: ModelProfile, tokens: Sequence[str]) -> list[EmbeddingVector]:
        """Embed each string independently, batching to respect the endpoint limit."""
        tokens = list(tokens)
        if not tokens:
            raise InvalidInput("tokens must be non-empty")
        if any(not isinstance(t, str) or not t for t in tokens):
            raise InvalidInput("every token must be a non-empty string")
        vectors: list[EmbeddingVector] = []
        for start in range(0, len(tokens), self.embed_batch_size):
            batch = tokens[start : start + self.embed_batch_size]
            vectors.extend(self._embed(profile, batch, len(batch)))
        if len({v.dimension for v in vectors}) != 1:
            raise BadResponse("embeddings of differing dimension in one response")
        return vectors

    def embed_text(self, profile: ModelProfile, text: str) -> EmbeddingVector:
        if not text:
            raise InvalidInput("text must be non-empty")
        return self._embed(profile, text, 1)[0]


class EmbeddingProvider:
    """Adapter exposing a gateway + profile as the embedder the metrics expect.

    Vectors are memoized per string, so repeated tokens across pairs are
    fetched once.
    """

    def __init__(self, gateway: Gateway, profile: ModelProfile):
        self.gateway = gateway
        self.profile = profile
        self._cache: dict[str, tuple[float, ...]] = {}
        self._lock = threading.Lock()

    def embed_tokens(self, tokens: Sequence[str]) -> list[tuple[float, ...]]:
        with self._lock:
            missing = list(dict.fromkeys(t for t in tokens if t not in self._cache))
        if missing:
            fetched = self.gateway.embed_tokens(self.profile, missing)
            with self._lock:
                for tok, vec in zip(missing, fetched):
                    self._cache[tok] = vec.values
        with self._lock:
            return [self._cache[t] for t in tokens]

    def embed_text(self, text: str) -> tuple[float, ...]:
        with self._lock:
            hit = self._cache.get(text)
        if hit is not None:
            return hit
        vec = self.gateway.embed_text(self.profile, text).values
        with self._lock:
            self._cache[text] = vec
        return vec
