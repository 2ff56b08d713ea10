"""The structured reply envelope and its guardrail loop.

Every agent must answer with one JSON object carrying a status of
"question" or "final". Anything else is malformed, and malformed replies
(or well-formed finals whose payload fails validation) trigger a
corrective re-prompt: the parse error or the violation list is appended to
the conversation as a system turn and the prompt is sent again, up to the
configured budget. Spending the budget is a fatal guardrail error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Optional

from ..errors import GuardrailExhaustedError
from .backends import send_turn
from .config import AgentConfig, ENVELOPE_INSTRUCTIONS
from .prompts import ConversationTurn

STATUS_QUESTION = "question"
STATUS_FINAL = "final"

_ENVELOPE_KEYS = {"status", "message", "payload"}


@dataclass(frozen=True)
class Envelope:
    status: str
    message: str
    payload: Optional[dict] = None


class EnvelopeParseError(ValueError):
    """Raised when agent output does not conform to the envelope wire format.

    Carries the raw text so the caller can quote it back in a re-prompt.
    """

    def __init__(self, reason: str, raw: str):
        super().__init__(reason)
        self.reason = reason
        self.raw = raw


def parse_envelope(raw: str) -> Envelope:
    """Parse one reply. Strict: a single JSON object, status in
    {question, final}, message a string, payload (optional) an object,
    and no other top-level fields."""
    try:
        data = json.loads(raw)
    except (json.JSONDecodeError, TypeError) as exc:
        raise EnvelopeParseError(f"not a JSON object: {exc}", raw) from exc
    if not isinstance(data, dict):
        raise EnvelopeParseError("reply must be a single JSON object", raw)

    extra = set(data) - _ENVELOPE_KEYS
    if extra:
        raise EnvelopeParseError(f"unexpected fields {sorted(extra)}", raw)
    status = data.get("status")
    if status not in (STATUS_QUESTION, STATUS_FINAL):
        raise EnvelopeParseError(f'status must be "question" or "final", got {status!r}', raw)
    message = data.get("message")
    if not isinstance(message, str):
        raise EnvelopeParseError("message must be a string", raw)
    payload = data.get("payload")
    if payload is not None and not isinstance(payload, dict):
        raise EnvelopeParseError("payload must be an object when present", raw)
    return Envelope(status=status, message=message, payload=payload)


@dataclass
class ExchangeResult:
    envelope: Envelope
    payload: Optional[dict]
    reprompts_used: int


#: Inspects a final envelope's payload; returns (violation messages, normalized
#: payload). An empty violation list accepts the payload.
PayloadCheck = Callable[[Optional[dict]], tuple[list[str], Optional[dict]]]


def _accept_any(payload: Optional[dict]) -> tuple[list[str], Optional[dict]]:
    return [], payload


def guarded_exchange(config: AgentConfig,
                     backend,
                     conversation: list[ConversationTurn],
                     render: Callable[[list[ConversationTurn]], str],
                     *,
                     payload_check: PayloadCheck = _accept_any,
                     allow_questions: bool = True,
                     require_payload: bool = True,
                     reprompt_budget: int | None = None) -> ExchangeResult:
    """Run one agent interaction under the guardrail policy.

    Mutates `conversation` in place: corrective system turns are appended on
    each violation so they show up in the re-rendered prompt (and in the
    session log). The accepted agent reply is NOT appended; the caller owns
    that, since question and final turns are logged differently.
    """
    budget = config.max_reprompt if reprompt_budget is None else reprompt_budget
    used = 0
    while True:
        raw = send_turn(config, backend, render(conversation))
        correction = None
        try:
            envelope = parse_envelope(raw)
        except EnvelopeParseError as exc:
            correction = (
                f"Your previous reply was rejected: {exc.reason}. "
                f"Reply again. {ENVELOPE_INSTRUCTIONS}"
            )
        else:
            if envelope.status == STATUS_QUESTION:
                if allow_questions:
                    return ExchangeResult(envelope, None, used)
                correction = (
                    "This is a one-shot interaction: clarifying questions are not "
                    "available. Reply again with a final envelope. "
                    + ENVELOPE_INSTRUCTIONS
                )
            else:
                if require_payload and envelope.payload is None:
                    correction = (
                        'Your final reply is missing its "payload" object. '
                        "Reply again with the completed document in the payload. "
                        + ENVELOPE_INSTRUCTIONS
                    )
                else:
                    violations, normalized = payload_check(envelope.payload)
                    if not violations:
                        return ExchangeResult(envelope, normalized, used)
                    listing = "; ".join(violations)
                    correction = (
                        f"The payload in your previous reply failed validation: {listing}. "
                        "Reply again with a corrected final envelope."
                    )

        if used >= budget:
            raise GuardrailExhaustedError(
                f"agent {config.agent_id} produced no acceptable reply after "
                f"{used} corrective re-prompt(s): {correction}")
        used += 1
        conversation.append(ConversationTurn(speaker="system", text=correction))
