"""Completion gateway: one interface over a remote chat endpoint and a
deterministic record/replay cassette, so every pipeline behavior runs
offline in tests.

A cassette is a JSON-lines file mapping the digest of a canonicalized
prompt to the completion that was recorded for it. Replay looks up by
digest; record forwards to an inner backend and appends what came back.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Protocol

import httpx

CANONICAL_DELIMITER = "\n---\n"

ENV_URL = "LLADA_LLM_URL"
ENV_KEY = "LLADA_LLM_KEY"
ENV_MODEL = "LLADA_LLM_MODEL"
ENV_CASSETTE = "LLADA_CASSETTE"
ENV_MODE = "LLADA_LLM_MODE"

MODES = ("remote", "record", "replay")


class LlmError(Exception):
    pass


class ReplayMiss(LlmError):
    """Replay-mode lookup failed; carries the canonical prompt for diagnosis."""

    def __init__(self, digest: str, canonical: str):
        super().__init__(f"no cassette entry for digest {digest}")
        self.digest = digest
        self.canonical = canonical


class RemoteError(LlmError):
    pass


class Timeout(LlmError):
    pass


@dataclass(frozen=True)
class Message:
    role: str
    content: str


@dataclass(frozen=True)
class ChatPrompt:
    """Ordered system/user messages; the first message must be system."""

    messages: tuple[Message, ...]

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("prompt must contain at least one message")
        if self.messages[0].role != "system":
            raise ValueError("first message must have role 'system'")
        for m in self.messages:
            if m.role not in ("system", "user"):
                raise ValueError(f"unsupported role {m.role!r}")
            if not m.content.strip():
                raise ValueError("message contents must be non-empty")

    @classmethod
    def of(cls, system: str, user: str) -> "ChatPrompt":
        return cls(messages=(Message("system", system), Message("user", user)))


@dataclass(frozen=True)
class CompletionSettings:
    model_id: str = "gpt-4"
    temperature: float = 0.0
    max_tokens: int = 512

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")


_SPACE_RUN_RE = re.compile(r"[ \t]+")


def _normalize_content(content: str) -> str:
    text = content.replace("\r\n", "\n").replace("\r", "\n")
    return _SPACE_RUN_RE.sub(" ", text).strip()


def canonicalize(prompt: ChatPrompt) -> str:
    """Deterministic serialization of a prompt; the digest preimage.

    Whitespace differences that cannot matter to a chat endpoint (trailing
    spaces, runs of blanks, CRLF) canonicalize away; message order and
    roles are preserved.
    """
    blocks = [f"{m.role}\n{_normalize_content(m.content)}" for m in prompt.messages]
    return CANONICAL_DELIMITER.join(blocks)


def prompt_digest(prompt: ChatPrompt) -> str:
    return digest_of(canonicalize(prompt))


def digest_of(canonical: str) -> str:
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CassetteEntry:
    prompt_canonical: str
    completion: str
    recorded_at: str


@dataclass
class Cassette:
    """Append-only map from prompt digest to recorded completion."""

    entries: dict[str, CassetteEntry] = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | Path) -> "Cassette":
        entries: dict[str, CassetteEntry] = {}
        text = Path(path).read_text(encoding="utf-8")
        for line in text.splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            entry = CassetteEntry(
                prompt_canonical=record["prompt"],
                completion=record["completion"],
                recorded_at=record["recorded_at"],
            )
            expected = digest_of(entry.prompt_canonical)
            if record["digest"] != expected:
                raise ValueError(
                    f"cassette digest mismatch: {record['digest']} != {expected}"
                )
            entries[record["digest"]] = entry
        return cls(entries=entries)

    def lookup(self, digest: str) -> CassetteEntry | None:
        return self.entries.get(digest)


class Backend(Protocol):
    def complete(self, prompt: ChatPrompt, settings: CompletionSettings) -> str: ...


class ReplayBackend:
    """Serves completions from an immutable cassette snapshot."""

    def __init__(self, cassette: Cassette):
        self.cassette = cassette

    @classmethod
    def from_path(cls, path: str | Path) -> "ReplayBackend":
        return cls(Cassette.load(path))

    def complete(self, prompt: ChatPrompt, settings: CompletionSettings) -> str:
        canonical = canonicalize(prompt)
        digest = digest_of(canonical)
        entry = self.cassette.lookup(digest)
        if entry is None:
            raise ReplayMiss(digest, canonical)
        return entry.completion


class RemoteBackend:
    """Chat-completion JSON-over-HTTP endpoint with bounded retries.

    Transport failures and 5xx responses are retried (exponential backoff);
    other HTTP errors fail immediately.
    """

    def __init__(
        self,
        url: str,
        api_key: str | None = None,
        timeout: float = 30.0,
        retries: int = 2,
        backoff: float = 0.5,
    ):
        self.url = url
        self.api_key = api_key
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff

    def complete(self, prompt: ChatPrompt, settings: CompletionSettings) -> str:
        payload = {
            "model": settings.model_id,
            "messages": [
                {"role": m.role, "content": m.content} for m in prompt.messages
            ],
            "temperature": settings.temperature,
            "max_tokens": settings.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                response = httpx.post(
                    self.url, json=payload, headers=headers, timeout=self.timeout
                )
            except httpx.TimeoutException as exc:
                last_error = exc
                continue
            except httpx.TransportError as exc:
                last_error = exc
                continue
            if response.status_code >= 500:
                last_error = RemoteError(
                    f"server error {response.status_code}: {response.text[:200]}"
                )
                continue
            if response.status_code != 200:
                raise RemoteError(
                    f"unexpected status {response.status_code}: {response.text[:200]}"
                )
            try:
                return response.json()["choices"][0]["message"]["content"]
            except (KeyError, IndexError, ValueError) as exc:
                raise RemoteError(f"malformed completion response: {exc}") from exc

        if isinstance(last_error, httpx.TimeoutException):
            raise Timeout(f"request timed out after {self.retries + 1} attempts")
        raise RemoteError(f"request failed after {self.retries + 1} attempts: {last_error}")


class RecordBackend:
    """Forwards to an inner backend and appends each exchange to a cassette."""

    def __init__(self, inner: Backend, cassette_path: str | Path):
        self.inner = inner
        self.cassette_path = Path(cassette_path)
        self._lock = threading.Lock()

    def complete(self, prompt: ChatPrompt, settings: CompletionSettings) -> str:
        completion = self.inner.complete(prompt, settings)
        canonical = canonicalize(prompt)
        record = {
            "digest": digest_of(canonical),
            "prompt": canonical,
            "completion": completion,
            "recorded_at": datetime.now(timezone.utc).isoformat(),
        }
        with self._lock:
            self.cassette_path.parent.mkdir(parents=True, exist_ok=True)
            with self.cassette_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record) + "\n")
        return completion


class QueueBackend:
    """Answers from a fixed queue of completions; raises when drained.

    Scripting aid for fixture building and unit tests.
    """

    def __init__(self, completions: Iterable[str]):
        self._queue = list(completions)
        self.calls: list[ChatPrompt] = []

    def complete(self, prompt: ChatPrompt, settings: CompletionSettings) -> str:
        self.calls.append(prompt)
        if not self._queue:
            raise RemoteError("scripted backend drained")
        return self._queue.pop(0)

    @property
    def drained(self) -> bool:
        return not self._queue


class CountingBackend:
    """Delegates to an inner backend while counting completions."""

    def __init__(self, inner: Backend):
        self.inner = inner
        self.count = 0

    def complete(self, prompt: ChatPrompt, settings: CompletionSettings) -> str:
        self.count += 1
        return self.inner.complete(prompt, settings)


def make_backend(
    mode: str | None = None,
    url: str | None = None,
    api_key: str | None = None,
    cassette_path: str | Path | None = None,
) -> Backend:
    """Build a backend from explicit arguments with environment fallback."""
    mode = mode or os.environ.get(ENV_MODE, "replay")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}: {mode!r}")
    cassette_path = cassette_path or os.environ.get(ENV_CASSETTE)
    if mode == "replay":
        if not cassette_path:
            raise ValueError("replay mode requires a cassette path")
        return ReplayBackend.from_path(cassette_path)
    url = url or os.environ.get(ENV_URL)
    if not url:
        raise ValueError(f"{mode} mode requires an endpoint URL")
    api_key = api_key or os.environ.get(ENV_KEY)
    remote = RemoteBackend(url=url, api_key=api_key)
    if mode == "remote":
        return remote
    if not cassette_path:
        raise ValueError("record mode requires a cassette path")
    return RecordBackend(remote, cassette_path)


def settings_from_env(model_id: str | None = None) -> CompletionSettings:
    return CompletionSettings(
        model_id=model_id or os.environ.get(ENV_MODEL, "gpt-4")
    )
