"""Deterministic prompt assembly.

A prompt is the role text, the numbered guardrail checklist, one labeled
section per prior artifact (embedded as canonical JSON, byte-for-byte the
same text the output handler writes to disk), one context section per
retrieved snippet, and finally the conversation so far. Identical inputs
always produce identical bytes.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from ..artifacts import canonical_text
from .config import AgentConfig
from .retrieval import Snippet

SPEAKERS = ("system", "user", "agent")


@dataclass
class ConversationTurn:
    speaker: str
    text: str
    timestamp: float = field(default_factory=time.time)

    def __post_init__(self):
        if self.speaker not in SPEAKERS:
            raise ValueError(f"speaker must be one of {SPEAKERS}, got {self.speaker!r}")
        if self.speaker in ("user", "agent") and not self.text.strip():
            raise ValueError(f"{self.speaker} turns must carry nonempty text")

    def to_dict(self) -> dict:
        return {"speaker": self.speaker, "text": self.text, "timestamp": self.timestamp}

    @classmethod
    def from_dict(cls, data: dict) -> "ConversationTurn":
        return cls(speaker=data["speaker"], text=data["text"],
                   timestamp=data.get("timestamp", 0.0))


def render_prompt(config: AgentConfig,
                  prior_artifacts: list[dict] | None = None,
                  snippets: list[Snippet] | None = None,
                  conversation: list[ConversationTurn] | None = None) -> str:
    """Assemble the full prompt text for one agent turn."""
    parts = [config.role_text]

    if config.guardrail_checklist:
        lines = ["Requirements checklist:"]
        lines += [f"{i}. {item}" for i, item in enumerate(config.guardrail_checklist, 1)]
        parts.append("\n".join(lines))

    for doc in prior_artifacts or []:
        kind = doc.get("artifact_kind", "document") if isinstance(doc, dict) else "document"
        parts.append(f"[artifact: {kind}]\n{canonical_text(doc)}")

    for snippet in snippets or []:
        parts.append(f"[context: {snippet.source_id}]\n{snippet.text}")

    if conversation:
        lines = ["[conversation]"]
        lines += [f"{turn.speaker}: {turn.text}" for turn in conversation]
        parts.append("\n".join(lines))

    return "\n\n".join(parts)
