"""Role-configured agents: prompt assembly, envelope protocol, backends."""

from .backends import (
    Exchange,
    HttpBackend,
    ScriptedBackend,
    TranscriptEntry,
    backend_from_env,
    load_transcript,
    send_turn,
)
from .config import (
    AGENT_IDS,
    CODE_GENERATOR,
    CODE_REPAIRER,
    COMPUTE_SPECIFIER,
    PIPELINE_DESIGNER,
    PREPROCESSING_DESIGNER,
    PROBLEM_DEFINER,
    AgentConfig,
    default_agent_configs,
)
from .prompts import ConversationTurn, render_prompt
from .protocol import (
    STATUS_FINAL,
    STATUS_QUESTION,
    Envelope,
    EnvelopeParseError,
    ExchangeResult,
    guarded_exchange,
    parse_envelope,
)
from .retrieval import Snippet, SnippetCorpus, retrieve_context

__all__ = [
    "AGENT_IDS",
    "AgentConfig",
    "CODE_GENERATOR",
    "CODE_REPAIRER",
    "COMPUTE_SPECIFIER",
    "ConversationTurn",
    "Envelope",
    "EnvelopeParseError",
    "Exchange",
    "ExchangeResult",
    "HttpBackend",
    "PIPELINE_DESIGNER",
    "PREPROCESSING_DESIGNER",
    "PROBLEM_DEFINER",
    "STATUS_FINAL",
    "STATUS_QUESTION",
    "ScriptedBackend",
    "Snippet",
    "SnippetCorpus",
    "TranscriptEntry",
    "backend_from_env",
    "default_agent_configs",
    "guarded_exchange",
    "load_transcript",
    "parse_envelope",
    "render_prompt",
    "retrieve_context",
    "send_turn",
]
