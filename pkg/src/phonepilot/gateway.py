"""Uniform multimodal model interface.

``HttpBackend`` posts a chat-completions style JSON payload (text parts
plus base64 data-URL image parts) to a configured endpoint.  The endpoint
and credential come from ``PHONEPILOT_MODEL_ENDPOINT`` /
``PHONEPILOT_MODEL_KEY`` unless given explicitly.

``ScriptedBackend`` returns canned responses for deterministic tests.  A
script book maps each caller to step-keyed entries, pattern entries
(substring(s) over the request text), or both; exactly one entry may
match a request.  Script book files are JSON::

    {
      "manager": {
        "steps": {"1": "PLAN: ...\\nSUBGOAL: ..."},
        "patterns": [
          {"contains": ["3_oled_tv", "PREVIOUS SUBGOAL: (none)"],
           "response": "PLAN: ...\\nSUBGOAL: ..."}
        ]
      }
    }

``Gateway`` wraps a backend and records every request/response pair; when
given a directory it also persists them as the model audit log.
"""

from __future__ import annotations

import base64
import json
import logging
import os
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

from .errors import ScriptAmbiguityError, ScriptMissError, TransportError

log = logging.getLogger(__name__)

ENDPOINT_ENV = "PHONEPILOT_MODEL_ENDPOINT"
KEY_ENV = "PHONEPILOT_MODEL_KEY"

MAX_ATTEMPTS = 3


@dataclass(frozen=True)
class TextPart:
    text: str


@dataclass(frozen=True)
class ImagePart:
    source: bytes | Path

    def data(self) -> bytes:
        if isinstance(self.source, Path):
            return self.source.read_bytes()
        return self.source


@dataclass(frozen=True)
class Message:
    role: str
    parts: tuple[TextPart | ImagePart, ...]


@dataclass(frozen=True)
class ModelRequest:
    caller: str
    messages: tuple[Message, ...]
    temperature: float = 0.0
    max_output_tokens: int = 2048

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("a model request needs at least one message")
        for message in self.messages:
            for part in message.parts:
                if isinstance(part, ImagePart):
                    if isinstance(part.source, Path) and not part.source.exists():
                        raise ValueError(f"image part not readable: {part.source}")
                    if isinstance(part.source, bytes) and not part.source:
                        raise ValueError("image part holds no data")

    def text(self) -> str:
        """All text content concatenated, used for matching and contracts."""
        chunks = [
            part.text
            for message in self.messages
            for part in message.parts
            if isinstance(part, TextPart)
        ]
        return "\n".join(chunks)

    def image_count(self) -> int:
        return sum(
            isinstance(part, ImagePart)
            for message in self.messages
            for part in message.parts
        )


def simple_request(caller: str, text: str, images: Sequence[bytes | Path] = ()) -> ModelRequest:
    parts: list[TextPart | ImagePart] = [TextPart(text)]
    parts.extend(ImagePart(img) for img in images)
    return ModelRequest(caller=caller, messages=(Message(role="user", parts=tuple(parts)),))


class ModelBackend(Protocol):
    def complete(self, request: ModelRequest) -> str: ...


@dataclass
class ScriptEntry:
    response: str
    step: int | None = None
    contains: tuple[str, ...] = ()


class ScriptedBackend:
    """Deterministic canned-response backend for tests and golden runs."""

    def __init__(self, entries: dict[str, list[ScriptEntry]]):
        self.entries = entries
        self.counters: dict[str, int] = {}

    @classmethod
    def from_dict(cls, data: dict) -> "ScriptedBackend":
        entries: dict[str, list[ScriptEntry]] = {}
        for caller, spec in data.items():
            caller_entries: list[ScriptEntry] = []
            for step, response in spec.get("steps", {}).items():
                caller_entries.append(ScriptEntry(response=response, step=int(step)))
            for pattern in spec.get("patterns", []):
                contains = pattern["contains"]
                if isinstance(contains, str):
                    contains = [contains]
                caller_entries.append(
                    ScriptEntry(response=pattern["response"], contains=tuple(contains))
                )
            entries[caller] = caller_entries
        return cls(entries)

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedBackend":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def complete(self, request: ModelRequest) -> str:
        step = self.counters.get(request.caller, 0) + 1
        self.counters[request.caller] = step
        text = request.text()
        matches = []
        for entry in self.entries.get(request.caller, []):
            if entry.step is not None:
                if entry.step == step:
                    matches.append(entry)
            elif all(needle in text for needle in entry.contains):
                matches.append(entry)
        if not matches:
            raise ScriptMissError(
                f"no scripted response for caller {request.caller!r} at step {step}"
            )
        if len(matches) > 1:
            raise ScriptAmbiguityError(
                f"{len(matches)} scripted entries match caller {request.caller!r} at step {step}"
            )
        return matches[0].response


class HttpBackend:
    """Chat-completions style HTTP backend with a bounded retry budget."""

    def __init__(
        self,
        endpoint: str | None = None,
        api_key: str | None = None,
        model: str = "default",
        timeout: float = 120.0,
        backoff: float = 0.5,
    ):
        self.endpoint = endpoint or os.environ.get(ENDPOINT_ENV, "")
        self.api_key = api_key if api_key is not None else os.environ.get(KEY_ENV, "")
        if not self.endpoint:
            raise ValueError(
                f"no model endpoint configured; set {ENDPOINT_ENV} or pass endpoint="
            )
        self.model = model
        self.timeout = timeout
        self.backoff = backoff

    def _payload(self, request: ModelRequest) -> dict:
        messages = []
        for message in request.messages:
            content = []
            for part in message.parts:
                if isinstance(part, TextPart):
                    content.append({"type": "text", "text": part.text})
                else:
                    encoded = base64.b64encode(part.data()).decode("ascii")
                    content.append(
                        {
                            "type": "image_url",
                            "image_url": {"url": f"data:image/png;base64,{encoded}"},
                        }
                    )
            messages.append({"role": message.role, "content": content})
        return {
            "model": self.model,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
            "messages": messages,
        }

    def complete(self, request: ModelRequest) -> str:
        body = json.dumps(self._payload(request)).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error: Exception | None = None
        for attempt in range(MAX_ATTEMPTS):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            http_request = urllib.request.Request(
                self.endpoint, data=body, headers=headers, method="POST"
            )
            try:
                with urllib.request.urlopen(http_request, timeout=self.timeout) as response:
                    data = json.loads(response.read().decode("utf-8"))
                return data["choices"][0]["message"]["content"]
            except (urllib.error.URLError, OSError, KeyError, json.JSONDecodeError) as exc:
                last_error = exc
                log.warning("model call attempt %d failed: %s", attempt + 1, exc)
        raise TransportError(
            f"model endpoint failed after {MAX_ATTEMPTS} attempts: {last_error}"
        )


@dataclass
class AuditRecord:
    index: int
    caller: str
    request_text: str
    response: str
    image_count: int


@dataclass
class Gateway:
    """Auditing wrapper: every request/response pair is recorded and,
    when a directory is set, persisted for post-hoc inspection."""

    backend: ModelBackend
    audit_dir: Path | None = None
    records: list[AuditRecord] = field(default_factory=list)

    def set_audit_dir(self, path: Path | None) -> None:
        self.audit_dir = path
        if path is not None:
            path.mkdir(parents=True, exist_ok=True)

    def complete(self, request: ModelRequest) -> str:
        response = self.backend.complete(request)
        record = AuditRecord(
            index=len(self.records),
            caller=request.caller,
            request_text=request.text(),
            response=response,
            image_count=request.image_count(),
        )
        self.records.append(record)
        if self.audit_dir is not None:
            path = self.audit_dir / f"{record.index:04d}_{record.caller}.json"
            path.write_text(
                json.dumps(
                    {
                        "index": record.index,
                        "caller": record.caller,
                        "request_text": record.request_text,
                        "image_count": record.image_count,
                        "response": record.response,
                    },
                    indent=2,
                    ensure_ascii=False,
                )
                + "\n",
                encoding="utf-8",
            )
        return response

    def records_for(self, caller: str) -> list[AuditRecord]:
        return [r for r in self.records if r.caller == caller]
