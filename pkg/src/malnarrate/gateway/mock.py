"""In-process stand-in for an OpenAI-compatible server.

Plug it into :class:`~malnarrate.gateway.client.Gateway` through
``transport=backend.transport()``; requests then travel the normal client path
(serialization, retries, error mapping) without touching the network.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Mapping, Sequence

import httpx
import numpy as np

from ..distill import estimate_tokens

TIMEOUT = "timeout"
CONNECT_ERROR = "connect_error"


def digest_embedding(text: str, dimension: int = 64) -> tuple[float, ...]:
    """Unit vector derived from SHA-256 of ``text``; equal inputs give equal vectors."""
    raw = bytearray()
    counter = 0
    data = text.encode("utf-8")
    while len(raw) < 4 * dimension:
        raw += hashlib.sha256(counter.to_bytes(4, "big") + data).digest()
        counter += 1
    ints = np.frombuffer(bytes(raw[: 4 * dimension]), dtype=">u4").astype(np.float64)
    vec = ints / 2.0**31 - 1.0
    vec /= np.linalg.norm(vec)
    return tuple(float(v) for v in vec)


@dataclass(frozen=True)
class RecordedRequest:
    path: str
    body: dict
    headers: Mapping[str, str]


_EVIDENCE_LINE = re.compile(r"^\s*-\s+(.*)$")
_SIG_LINE = re.compile(r"^(?P<name>\S+) \(severity \d+\)(?::\s*(?P<desc>[^|]*))?")


def synthetic_completion(body: dict) -> str:
    """Deterministic four-section summary built from the evidence in the prompt.

    Stands in for a real model during offline runs; the wording depends on the
    requested model name so different profiles produce different text.
    """
    user = next((m["content"] for m in body.get("messages", []) if m.get("role") == "user"), "")
    model = str(body.get("model", ""))
    variant = hashlib.sha256(model.encode("utf-8")).digest()[0] % 3

    signatures, processes, calls, network, dropped = [], [], [], [], []
    section = None
    for line in user.splitlines():
        if line.startswith("## "):
            section = line[3:].strip().lower()
            continue
        m = _EVIDENCE_LINE.match(line)
        if not m:
            continue
        item = m.group(1).strip()
        if section and section.startswith("triggered"):
            sm = _SIG_LINE.match(item)
            if sm:
                signatures.append((sm.group("name"), (sm.group("desc") or "").strip()))
        elif section and section.startswith("processes"):
            if line.startswith("  "):
                calls.append(item.split()[0])
            elif item.startswith("process "):
                parts = item.split()
                if len(parts) >= 3:
                    processes.append(parts[2])
        elif section and section.startswith("network"):
            network.append(item)
        elif section and section.startswith("dropped"):
            dropped.append(item.split(" (")[0])

    opener = ("The sample", "This malware", "The analyzed executable")[variant]
    if signatures:
        names = ", ".join(n for n, _ in signatures[:5])
        overview = f"{opener} triggered {len(signatures)} behavioral signatures including {names}."
    else:
        overview = f"{opener} did not trigger any behavioral signatures."
    if processes:
        overview += f" It started {len(processes)} processes such as {processes[0]}."

    behaviors = [f"It {d[0].lower() + d[1:]}" if d else f"It matched the {n} rule." for n, d in signatures[:6]]
    behaviors = [b if b.endswith(".") else b + "." for b in behaviors]
    if calls:
        uniq = list(dict.fromkeys(calls))[: 4 + variant]
        behaviors.append("It invoked the APIs " + ", ".join(uniq) + ".")
    if network:
        behaviors.append(f"It performed {len(network)} network operations, for example {network[0]}.")
    if dropped:
        behaviors.append(f"It dropped {len(dropped)} files including {dropped[0]}.")
    if not behaviors:
        behaviors.append("No notable activity was recorded.")

    impact_bits = []
    if network:
        impact_bits.append("may communicate with remote infrastructure")
    if dropped:
        impact_bits.append("writes additional payloads to disk")
    if any("persist" in n or "autorun" in n for n, _ in signatures):
        impact_bits.append("survives reboots through persistence")
    impact = (
        "The malware " + " and ".join(impact_bits) + "."
        if impact_bits
        else "The observed activity suggests limited direct impact on the host."
    )
    actions = "Isolate the affected host and collect forensic artifacts."
    if network:
        actions += " Block the contacted network indicators at the perimeter."
    if variant == 2:
        actions += " Review endpoint logs for related activity."

    return (
        f"## Overview\n{overview}\n\n"
        f"## Observed Behaviors\n{' '.join(behaviors)}\n\n"
        f"## Impact\n{impact}\n\n"
        f"## Recommended Actions\n{actions}\n"
    )


class MockBackend:
    """Scriptable fake endpoint serving chat completions and embeddings.

    ``script`` is consumed one item per chat request before ``responder`` is
    used; items may be a completion string, an HTTP status code, or one of
    ``TIMEOUT`` / ``CONNECT_ERROR``. ``fail_when`` returns a status (or one of
    those markers) for requests that must keep failing, e.g. for one sample.
    """

    def __init__(
        self,
        *,
        responder: Callable[[dict], str] = synthetic_completion,
        script: Iterable[Any] = (),
        fail_when: Callable[[dict], Any] | None = None,
        context_window: int | None = None,
        dimension: int = 64,
        batch_limit: int | None = None,
        api_key: str | None = None,
        embeddings: Mapping[str, Sequence[float]] | None = None,
        report_usage: bool = True,
    ):
        self.responder = responder
        self.script = list(script)
        self.fail_when = fail_when
        self.context_window = context_window
        self.dimension = dimension
        self.batch_limit = batch_limit
        self.api_key = api_key
        self.embeddings = dict(embeddings or {})
        self.report_usage = report_usage
        self.requests: list[RecordedRequest] = []
        self._lock = threading.Lock()

    @classmethod
    def echo(cls, text: str, **kwargs) -> "MockBackend":
        return cls(responder=lambda body: text, **kwargs)

    def transport(self) -> httpx.MockTransport:
        return httpx.MockTransport(self.handle)

    def requests_to(self, path: str) -> list[RecordedRequest]:
        with self._lock:
            return [r for r in self.requests if r.path.endswith(path)]

    def vector(self, text: str) -> list[float]:
        if text in self.embeddings:
            return [float(v) for v in self.embeddings[text]]
        return list(digest_embedding(text, self.dimension))

    @staticmethod
    def _error(status: int, message: str, code: str | None = None) -> httpx.Response:
        return httpx.Response(status, json={"error": {"message": message, "code": code}})

    def _raise_marker(self, marker: Any, request: httpx.Request) -> httpx.Response | None:
        if marker == TIMEOUT:
            raise httpx.ReadTimeout("mock timeout", request=request)
        if marker == CONNECT_ERROR:
            raise httpx.ConnectError("mock connection refused", request=request)
        if isinstance(marker, int):
            return self._error(marker, f"mock failure {marker}")
        return None

    def handle(self, request: httpx.Request) -> httpx.Response:
        body = json.loads(request.content or b"{}")
        path = request.url.path
        with self._lock:
            self.requests.append(RecordedRequest(path, body, dict(request.headers)))

        if self.api_key is not None and request.headers.get("authorization") != f"Bearer {self.api_key}":
            return self._error(401, "invalid api key", "invalid_api_key")
        if path.endswith("/v1/chat/completions"):
            return self._chat(request, body)
        if path.endswith("/v1/embeddings"):
            return self._embeddings(body)
        return self._error(404, f"no route {path}")

    def _chat(self, request: httpx.Request, body: dict) -> httpx.Response:
        if self.fail_when is not None:
            marker = self.fail_when(body)
            if marker is not None:
                response = self._raise_marker(marker, request)
                if response is not None:
                    return response

        prompt_tokens = sum(estimate_tokens(m.get("content", "")) for m in body.get("messages", []))
        if self.context_window is not None and prompt_tokens + int(body.get("max_tokens", 0)) > self.context_window:
            return self._error(
                400,
                f"This model's maximum context length is {self.context_window} tokens; "
                f"the request needs {prompt_tokens + int(body.get('max_tokens', 0))}.",
                "context_length_exceeded",
            )

        with self._lock:
            item = self.script.pop(0) if self.script else None
        if item is not None:
            response = self._raise_marker(item, request)
            if response is not None:
                return response
            text = str(item)
        else:
            text = self.responder(body)

        payload: dict[str, Any] = {
            "id": "mock-" + hashlib.sha256(text.encode("utf-8")).hexdigest()[:12],
            "object": "chat.completion",
            "model": body.get("model"),
            "choices": [{"index": 0, "message": {"role": "assistant", "content": text}, "finish_reason": "stop"}],
        }
        if self.report_usage:
            payload["usage"] = {
                "prompt_tokens": prompt_tokens,
                "completion_tokens": estimate_tokens(text),
                "total_tokens": prompt_tokens + estimate_tokens(text),
            }
        return httpx.Response(200, json=payload)

    def _embeddings(self, body: dict) -> httpx.Response:
        inputs = body.get("input")
        items = [inputs] if isinstance(inputs, str) else list(inputs or [])
        if self.batch_limit is not None and len(items) > self.batch_limit:
            return self._error(400, f"batch of {len(items)} exceeds limit {self.batch_limit}")
        if not items or any(not isinstance(t, str) or not t for t in items):
            return self._error(400, "input must be non-empty strings")
        data = [{"object": "embedding", "index": i, "embedding": self.vector(t)} for i, t in enumerate(items)]
        return httpx.Response(200, json={"object": "list", "model": body.get("model"), "data": data})
