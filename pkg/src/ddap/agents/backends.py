"""Model backends: a generic HTTP chat-completion client and a scripted
transcript player for deterministic runs.

Both record every (prompt, response) exchange on the handle, which is what
lets tests assert on the exact bytes an agent was shown. Transport failures
are retried with exponential backoff, up to three attempts; scripted
fixture errors are fatal and never retried.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass
from pathlib import Path

import requests

from ..errors import (
    BackendFailureError,
    RetryableBackendError,
    ScriptedFixtureError,
    TranscriptExhaustedError,
)
from .config import AgentConfig

MAX_ATTEMPTS = 3

ENV_BACKEND = "DDAP_LLM_BACKEND"
ENV_BASE_URL = "DDAP_LLM_BASE_URL"
ENV_MODEL = "DDAP_LLM_MODEL"
ENV_API_KEY = "DDAP_LLM_API_KEY"
ENV_SCRIPT_PATH = "DDAP_SCRIPT_PATH"


@dataclass
class Exchange:
    prompt: str
    response: str
    agent_id: str


class HttpBackend:
    """POSTs {base_url}/chat/completions with model, messages, temperature.

    The rendered prompt travels as a single user message; the reply is the
    first choice's message content.
    """

    def __init__(self, base_url: str, model: str, api_key: str = "",
                 timeout: float = 60.0, retry_base_seconds: float = 0.5):
        if not base_url:
            raise BackendFailureError("HTTP backend requires a base URL")
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self.retry_base_seconds = retry_base_seconds
        self.exchanges: list[Exchange] = []

    def note_stage(self, stage: str | None) -> None:  # stage is a scripted concern
        pass

    def send(self, prompt: str, config: AgentConfig) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": config.temperature,
        }
        try:
            resp = requests.post(f"{self.base_url}/chat/completions",
                                 json=body, headers=headers, timeout=self.timeout)
        except requests.RequestException as exc:
            raise RetryableBackendError(f"transport failure: {exc}") from exc

        if resp.status_code == 429 or resp.status_code >= 500:
            raise RetryableBackendError(f"backend returned status {resp.status_code}")
        if resp.status_code >= 400:
            raise BackendFailureError(
                f"backend rejected the request with status {resp.status_code}")
        try:
            text = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BackendFailureError(f"malformed completion response: {exc}") from exc
        if not isinstance(text, str):
            raise BackendFailureError("completion content was not text")
        self.exchanges.append(Exchange(prompt, text, config.agent_id))
        return text


@dataclass
class TranscriptEntry:
    response: str
    expect_stage: str | None = None


class ScriptedBackend:
    """Replays a fixed transcript, one entry per send, strictly in order.

    An entry may pin the stage it expects to be consumed in; a mismatch with
    the live stage is a fatal fixture error. The orchestrator keeps
    `current_stage` up to date through note_stage().
    """

    def __init__(self, entries: list[TranscriptEntry]):
        self.entries = list(entries)
        self.cursor = 0
        self.current_stage: str | None = None
        self.exchanges: list[Exchange] = []

    def note_stage(self, stage: str | None) -> None:
        self.current_stage = stage

    @property
    def remaining(self) -> int:
        return len(self.entries) - self.cursor

    def send(self, prompt: str, config: AgentConfig) -> str:
        if self.cursor >= len(self.entries):
            raise TranscriptExhaustedError(
                f"scripted transcript exhausted after {self.cursor} entries")
        entry = self.entries[self.cursor]
        if entry.expect_stage is not None and entry.expect_stage != self.current_stage:
            raise ScriptedFixtureError(
                f"transcript entry {self.cursor} expects stage "
                f"{entry.expect_stage!r} but the live stage is {self.current_stage!r}")
        self.cursor += 1
        self.exchanges.append(Exchange(prompt, entry.response, config.agent_id))
        return entry.response


def load_transcript(path: str | Path) -> list[TranscriptEntry]:
    """Read a transcript file: a JSON array of {response, expect_stage?}."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise ScriptedFixtureError(f"transcript {path} must be a JSON array")
    entries = []
    for i, item in enumerate(data):
        if not isinstance(item, dict) or not isinstance(item.get("response"), str):
            raise ScriptedFixtureError(
                f"transcript {path} entry {i} must be an object with a string 'response'")
        entries.append(TranscriptEntry(response=item["response"],
                                       expect_stage=item.get("expect_stage")))
    return entries


def send_turn(config: AgentConfig, backend, prompt: str) -> str:
    """One agent turn with bounded retries on transient transport failures."""
    last: RetryableBackendError | None = None
    for attempt in range(1, MAX_ATTEMPTS + 1):
        try:
            return backend.send(prompt, config)
        except RetryableBackendError as exc:
            last = exc
            if attempt < MAX_ATTEMPTS:
                base = getattr(backend, "retry_base_seconds", 0.5)
                time.sleep(base * 2 ** (attempt - 1))
    raise BackendFailureError(
        f"backend failed after {MAX_ATTEMPTS} attempts: {last}")


def backend_from_env(env: dict | None = None):
    """Build a backend from DDAP_LLM_* environment configuration."""
    env = dict(os.environ if env is None else env)
    kind = env.get(ENV_BACKEND, "http")
    if kind == "scripted":
        path = env.get(ENV_SCRIPT_PATH)
        if not path:
            raise BackendFailureError(
                f"{ENV_BACKEND}=scripted requires {ENV_SCRIPT_PATH}")
        return ScriptedBackend(load_transcript(path))
    if kind == "http":
        return HttpBackend(
            base_url=env.get(ENV_BASE_URL, ""),
            model=env.get(ENV_MODEL, ""),
            api_key=env.get(ENV_API_KEY, ""),
        )
    raise BackendFailureError(f"{ENV_BACKEND} must be 'http' or 'scripted', got {kind!r}")
