"""Model backends plus the token and cost accounting they all share.

Backends expose one method: ``complete(prompt) -> (completion, TokenUsage)``.
The scripted backend replays canned completions for deterministic tests;
the recording wrapper persists every exchange so a replay backend can
reproduce an episode byte for byte; the HTTP backend talks a provider-style
JSON chat protocol. The API credential is read from an environment
variable whose *name* is configurable; its value is never logged or stored.
"""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import requests

__all__ = [
    "CostModel",
    "ModelError",
    "PriceBook",
    "RecordingBackend",
    "ReplayBackend",
    "ScriptEntry",
    "ScriptedBackend",
    "HttpChatBackend",
    "TokenUsage",
    "TranscriptRecord",
    "TranscriptStore",
    "UnknownModel",
    "cost",
    "count_tokens",
]


@dataclass(frozen=True)
class TokenUsage:
    input_tokens: int = 0
    output_tokens: int = 0

    def __post_init__(self):
        if self.input_tokens < 0 or self.output_tokens < 0:
            raise ValueError("token counts must be non-negative")

    def __add__(self, other: "TokenUsage") -> "TokenUsage":
        return TokenUsage(
            self.input_tokens + other.input_tokens,
            self.output_tokens + other.output_tokens,
        )

    @property
    def total(self) -> int:
        return self.input_tokens + self.output_tokens


class ModelError(Exception):
    """kind is one of: script-exhausted, transport, provider-rejection."""

    def __init__(self, kind: str, message: str):
        super().__init__(f"{kind}: {message}")
        self.kind = kind


class UnknownModel(KeyError):
    pass


# ---------------------------------------------------------------------------
# Token counting

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


def count_tokens(text: str) -> int:
    """Reference segmentation: word runs and individual punctuation marks."""
    return len(_TOKEN_RE.findall(text))


# ---------------------------------------------------------------------------
# Cost accounting


@dataclass(frozen=True)
class CostModel:
    input_per_million: float
    output_per_million: float

    def __post_init__(self):
        if self.input_per_million < 0 or self.output_per_million < 0:
            raise ValueError("prices must be non-negative")


def cost(usage: TokenUsage, model: CostModel) -> float:
    """Linear price mapping; round only at display time."""
    return (
        usage.input_tokens / 1_000_000 * model.input_per_million
        + usage.output_tokens / 1_000_000 * model.output_per_million
    )


@dataclass
class PriceBook:
    models: dict[str, CostModel] = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | Path) -> "PriceBook":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        book = cls()
        for name, entry in data["models"].items():
            book.models[name] = CostModel(
                float(entry["input_per_million"]), float(entry["output_per_million"])
            )
        return book

    def get(self, name: str) -> CostModel:
        try:
            return self.models[name]
        except KeyError:
            raise UnknownModel(name) from None

    def cost(self, usage: TokenUsage, name: str) -> float:
        return cost(usage, self.get(name))


# ---------------------------------------------------------------------------
# Scripted backend


@dataclass
class ScriptEntry:
    completion: str
    match: str | Callable[[str], bool] | None = None
    usage: TokenUsage | None = None  # None -> reference-counted from the texts


class ScriptedBackend:
    """Replays canned completions in order; a matcher guards against drift."""

    def __init__(self, entries: Iterable[ScriptEntry]):
        self.entries = list(entries)
        self._cursor = 0
        self._lock = threading.Lock()

    def complete(self, prompt: str) -> tuple[str, TokenUsage]:
        if not prompt:
            raise ModelError("provider-rejection", "empty prompt")
        with self._lock:
            if self._cursor >= len(self.entries):
                raise ModelError("script-exhausted", f"no entry for call {self._cursor}")
            entry = self.entries[self._cursor]
            self._cursor += 1
        if entry.match is not None:
            matched = entry.match(prompt) if callable(entry.match) else entry.match in prompt
            if not matched:
                raise ModelError("provider-rejection", f"prompt did not match script entry {self._cursor - 1}")
        usage = entry.usage or TokenUsage(count_tokens(prompt), count_tokens(entry.completion))
        return entry.completion, usage

    @property
    def calls_made(self) -> int:
        return self._cursor


class ConstantBackend:
    """Returns the same completion for every call; handy for budget tests."""

    def __init__(self, completion: str):
        self.completion = completion
        self.calls_made = 0

    def complete(self, prompt: str) -> tuple[str, TokenUsage]:
        if not prompt:
            raise ModelError("provider-rejection", "empty prompt")
        self.calls_made += 1
        return self.completion, TokenUsage(count_tokens(prompt), count_tokens(self.completion))


# ---------------------------------------------------------------------------
# Recording / replay


@dataclass(frozen=True)
class TranscriptRecord:
    episode: str
    call_index: int
    prompt: str
    completion: str
    input_tokens: int
    output_tokens: int
    token_source: str = "reported"  # reported (by backend) or reference (local count)

    def to_json(self) -> str:
        return json.dumps(
            {
                "episode": self.episode,
                "call_index": self.call_index,
                "prompt": self.prompt,
                "completion": self.completion,
                "input_tokens": self.input_tokens,
                "output_tokens": self.output_tokens,
                "token_source": self.token_source,
            },
            ensure_ascii=False,
        )

    @classmethod
    def from_json(cls, line: str) -> "TranscriptRecord":
        data = json.loads(line)
        return cls(
            data["episode"],
            data["call_index"],
            data["prompt"],
            data["completion"],
            data["input_tokens"],
            data["output_tokens"],
            data.get("token_source", "reported"),
        )


class TranscriptStore:
    """Newline-delimited records keyed by (episode, call index)."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self.records: list[TranscriptRecord] = []
        if self.path is not None and self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self.records.append(TranscriptRecord.from_json(line))

    def append(self, record: TranscriptRecord) -> None:
        self.records.append(record)
        if self.path is not None:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(record.to_json() + "\n")

    def for_episode(self, episode: str) -> list[TranscriptRecord]:
        return sorted(
            (r for r in self.records if r.episode == episode), key=lambda r: r.call_index
        )


class RecordingBackend:
    """Wraps another backend and persists every exchange."""

    def __init__(self, inner, store: TranscriptStore, episode: str):
        self.inner = inner
        self.store = store
        self.episode = episode
        self._index = 0

    def complete(self, prompt: str) -> tuple[str, TokenUsage]:
        completion, usage = self.inner.complete(prompt)
        self.store.append(
            TranscriptRecord(
                self.episode, self._index, prompt, completion, usage.input_tokens, usage.output_tokens
            )
        )
        self._index += 1
        return completion, usage


class ReplayBackend:
    """Plays a recorded episode back, byte for byte."""

    def __init__(self, store: TranscriptStore, episode: str, strict: bool = True):
        self.records = store.for_episode(episode)
        self.strict = strict
        self._cursor = 0

    def complete(self, prompt: str) -> tuple[str, TokenUsage]:
        if self._cursor >= len(self.records):
            raise ModelError("script-exhausted", "no more recorded calls")
        record = self.records[self._cursor]
        self._cursor += 1
        if self.strict and prompt != record.prompt:
            raise ModelError("provider-rejection", f"prompt differs from recording at call {record.call_index}")
        return record.completion, TokenUsage(record.input_tokens, record.output_tokens)


# ---------------------------------------------------------------------------
# HTTP chat backend


class HttpChatBackend:
    """Provider-style JSON chat-completions client: one request per call.

    Credentials come from the environment variable named by ``api_key_env``
    (default MODEL_API_KEY); the value itself is never logged. Request and
    response bodies are persisted verbatim when a store is attached.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key_env: str = "MODEL_API_KEY",
        timeout: float = 60.0,
        store: TranscriptStore | None = None,
        episode: str = "http",
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self.timeout = timeout
        self.store = store
        self.episode = episode
        self._index = 0

    def complete(self, prompt: str) -> tuple[str, TokenUsage]:
        if not prompt:
            raise ModelError("provider-rejection", "empty prompt")
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
        }
        try:
            response = requests.post(
                f"{self.base_url}/chat/completions", json=body, headers=headers, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise ModelError("transport", str(exc)) from exc
        if response.status_code != 200:
            raise ModelError("provider-rejection", f"HTTP {response.status_code}: {response.text[:200]}")
        try:
            payload = response.json()
            completion = payload["choices"][0]["message"]["content"]
            usage_info = payload.get("usage", {})
            usage = TokenUsage(
                int(usage_info.get("prompt_tokens", count_tokens(prompt))),
                int(usage_info.get("completion_tokens", count_tokens(completion))),
            )
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ModelError("provider-rejection", f"malformed response: {exc}") from exc
        if self.store is not None:
            self.store.append(
                TranscriptRecord(
                    self.episode, self._index, prompt, completion, usage.input_tokens, usage.output_tokens
                )
            )
            self._index += 1
        return completion, usage
