"""Uniform conversation interface over chat-completion backends.

One wire dialect is spoken to every live backend: HTTP POST of
``{model, messages, temperature}`` with a bearer token read from a named
environment variable. A deterministic mock backend replays canned
replies keyed by request fingerprint, which makes every agent flow a
pure function during tests.
"""

from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

import httpx

from .errors import SdlcError

RETRY_BACKOFF_BASE_S = 0.1


class ProviderError(SdlcError):
    code = "provider_failure"


class AuthError(ProviderError):
    code = "provider_auth"


class ProviderTimeoutError(ProviderError):
    code = "provider_timeout"


class ProviderTransportError(ProviderError):
    code = "provider_transport"


class MalformedPayloadError(ProviderError):
    """Backend answered but the payload is not a chat completion."""

    code = "provider_malformed_payload"

    def __init__(self, message: str, raw_body: str):
        super().__init__(message, detail={"raw_body": raw_body})
        self.raw_body = raw_body


class MissingFingerprintError(ProviderError):
    code = "mock_missing_fingerprint"


@dataclass(frozen=True)
class ProviderConfig:
    label: str
    endpoint_url: str
    auth_key_ref: str
    timeout_ms: int = 30_000
    max_retries: int = 2

    def __post_init__(self):
        if not (self.endpoint_url.startswith("http://") or self.endpoint_url.startswith("https://")):
            raise ValueError(f"endpoint_url must be an http(s) URL, got {self.endpoint_url!r}")
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")


@dataclass(frozen=True)
class ChatRequest:
    """Provider-neutral conversation envelope.

    ``fingerprint`` identifies the prompt that produced the request
    (template id plus bindings hash); the mock backend keys replies on it.
    """

    model_label: str
    messages: tuple[tuple[str, str], ...]
    temperature: float = 0.0
    fingerprint: str | None = None

    def __post_init__(self):
        if not self.messages:
            raise ValueError("messages must be non-empty")
        for role, _ in self.messages:
            if role not in ("system", "user", "assistant"):
                raise ValueError(f"unknown message role {role!r}")
        if self.messages[-1][0] not in ("user", "system"):
            raise ValueError("last message role must be user or system")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0,2]")


@dataclass(frozen=True)
class ChatResponse:
    content: str
    status: str = "success"  # success | failure
    failure_detail: str | None = None
    latency_ms: int = 0
    empty_completion: bool = False

    def __post_init__(self):
        if self.status == "success" and not self.content and not self.empty_completion:
            raise ValueError("successful response must carry content or the empty-completion flag")


@dataclass(frozen=True)
class MockScript:
    """Canned replies keyed by request fingerprint.

    An entry key is either a full fingerprint (``template:hash``) or a
    template-wide wildcard (``template:*``). A lookup that matches
    neither is an error, never a silent fallback.
    """

    entries: dict[str, str] = field(default_factory=dict)
    seed: int = 0

    @classmethod
    def load(cls, path: Path | str) -> "MockScript":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(entries=dict(raw.get("entries", {})), seed=int(raw.get("seed", 0)))

    def lookup(self, fingerprint: str) -> str:
        if fingerprint in self.entries:
            return self.entries[fingerprint]
        template_id = fingerprint.split(":", 1)[0]
        wildcard = f"{template_id}:*"
        if wildcard in self.entries:
            return self.entries[wildcard]
        raise MissingFingerprintError(f"mock script has no entry for fingerprint {fingerprint!r}")


def mock_complete(request: ChatRequest, script: MockScript) -> ChatResponse:
    """Deterministic completion: pure function of (request, script)."""
    if request.fingerprint is None:
        raise MissingFingerprintError("request carries no fingerprint; cannot consult mock script")
    content = script.lookup(request.fingerprint)
    return ChatResponse(content=content, latency_ms=0, empty_completion=not content)


def _parse_completion(body: str) -> str:
    payload = json.loads(body)
    return payload["choices"][0]["message"]["content"]


def complete_chat(
    request: ChatRequest,
    config: ProviderConfig,
    *,
    client: httpx.Client | None = None,
    sleep: Callable[[float], None] = time.sleep,
    clock: Callable[[], float] = time.monotonic,
) -> ChatResponse:
    """POST the request to the configured endpoint, retrying transient failures.

    Auth problems fail immediately; transport failures and 5xx statuses
    retry up to ``max_retries`` times with exponential backoff. A reply
    that is not a chat completion raises with the raw body attached so a
    human can inspect it.
    """
    auth_key = os.environ.get(config.auth_key_ref)
    if not auth_key:
        raise AuthError(
            f"auth key environment variable {config.auth_key_ref!r} is unset; "
            "provider not configured"
        )
    body = {
        "model": request.model_label,
        "messages": [{"role": role, "content": content} for role, content in request.messages],
        "temperature": request.temperature,
    }
    headers = {"Authorization": f"Bearer {auth_key}"}
    timeout_s = config.timeout_ms / 1000.0
    owned = client is None
    http = client or httpx.Client(timeout=timeout_s)
    started = clock()
    last_error: Exception | None = None
    try:
        for attempt in range(config.max_retries + 1):
            if attempt:
                sleep(RETRY_BACKOFF_BASE_S * (2 ** (attempt - 1)))
            try:
                response = http.post(
                    config.endpoint_url, json=body, headers=headers, timeout=timeout_s
                )
            except httpx.TimeoutException as exc:
                last_error = exc
                continue
            except httpx.TransportError as exc:
                last_error = exc
                continue
            if response.status_code in (401, 403):
                raise AuthError(
                    f"provider rejected credentials with HTTP {response.status_code}"
                )
            if response.status_code >= 500 or response.status_code == 429:
                last_error = ProviderTransportError(
                    f"provider returned HTTP {response.status_code}"
                )
                continue
            if response.status_code != 200:
                raise ProviderTransportError(
                    f"provider returned HTTP {response.status_code}: {response.text[:200]}"
                )
            try:
                content = _parse_completion(response.text)
            except (json.JSONDecodeError, KeyError, IndexError, TypeError):
                raise MalformedPayloadError(
                    "provider payload is not a chat completion", raw_body=response.text
                )
            latency_ms = max(0, int((clock() - started) * 1000))
            return ChatResponse(
                content=content, latency_ms=latency_ms, empty_completion=not content
            )
    finally:
        if owned:
            http.close()
    if isinstance(last_error, httpx.TimeoutException):
        raise ProviderTimeoutError(
            f"provider timed out after {config.max_retries + 1} attempts"
        ) from last_error
    raise ProviderTransportError(
        f"provider unreachable after {config.max_retries + 1} attempts: {last_error}"
    ) from last_error


class Provider(Protocol):
    """What the agents need from any backend."""

    label: str

    def complete(self, request: ChatRequest) -> ChatResponse: ...


class LiveProvider:
    """Gateway to one configured backend; safe for concurrent use."""

    def __init__(self, config: ProviderConfig, client: httpx.Client | None = None):
        self.config = config
        self.label = config.label
        self._client = client

    def complete(self, request: ChatRequest) -> ChatResponse:
        return complete_chat(request, self.config, client=self._client)


class MockProvider:
    label = "mock"

    def __init__(self, script: MockScript):
        self.script = script

    def complete(self, request: ChatRequest) -> ChatResponse:
        return mock_complete(request, self.script)


class MetricsSink:
    """Thread-safe append-only latency log shared by gateway users."""

    def __init__(self):
        self._lock = threading.Lock()
        self._records: list[tuple[str, int]] = []

    def append(self, label: str, latency_ms: int) -> None:
        with self._lock:
            self._records.append((label, latency_ms))

    @property
    def records(self) -> tuple[tuple[str, int], ...]:
        with self._lock:
            return tuple(self._records)


def default_provider_configs() -> dict[str, ProviderConfig]:
    """Built-in provider registry; endpoint URLs overridable via environment.

    ``SDLC_AGENTS_<LABEL>_URL`` (label uppercased, dashes and dots to
    underscores) overrides the endpoint for one label.
    """
    defaults = {
        "gpt-3.5-turbo": ProviderConfig(
            label="gpt-3.5-turbo",
            endpoint_url="https://api.openai.com/v1/chat/completions",
            auth_key_ref="OPENAI_API_KEY",
        ),
        "gpt-4": ProviderConfig(
            label="gpt-4",
            endpoint_url="https://api.openai.com/v1/chat/completions",
            auth_key_ref="OPENAI_API_KEY",
        ),
        "llama3": ProviderConfig(
            label="llama3",
            endpoint_url="http://localhost:11434/v1/chat/completions",
            auth_key_ref="LLAMA_API_KEY",
        ),
    }
    out = {}
    for label, config in defaults.items():
        env_name = "SDLC_AGENTS_" + label.upper().replace("-", "_").replace(".", "_") + "_URL"
        override = os.environ.get(env_name)
        if override:
            config = ProviderConfig(
                label=config.label,
                endpoint_url=override,
                auth_key_ref=config.auth_key_ref,
                timeout_ms=config.timeout_ms,
                max_retries=config.max_retries,
            )
        out[label] = config
    return out
