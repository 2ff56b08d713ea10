"""Error hierarchy shared across the engine.

Every error the HTTP layer can surface maps onto exactly one of the six
public API codes; subclasses inherit the code of their parent.
"""

from __future__ import annotations


class DdapError(Exception):
    """Base class for all engine errors."""

    api_code = "backend_failure"

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class NotFoundError(DdapError):
    """A session, artifact, or file reference does not exist."""

    api_code = "not_found"


class StageOrderError(DdapError):
    """An operation was attempted at the wrong stage (or on a busy session)."""

    api_code = "bad_stage"


class ValidationFailedError(DdapError):
    """A document failed schema validation or an input was out of range."""

    api_code = "validation_failed"

    def __init__(self, detail: str, report=None):
        super().__init__(detail)
        self.report = report


class UnknownArtifactKindError(ValidationFailedError):
    """validate_artifact was called with a kind it does not know."""


class CandidateRangeError(ValidationFailedError):
    """A pipeline candidate index fell outside 1..5."""


class CorruptArtifactError(ValidationFailedError):
    """Stored artifact bytes no longer match their recorded content hash."""


class BackendFailureError(DdapError):
    """The model backend failed and the turn could not be completed."""

    api_code = "backend_failure"


class RetryableBackendError(BackendFailureError):
    """A transient transport failure; send_turn may retry it."""


class TranscriptExhaustedError(BackendFailureError):
    """The scripted backend ran out of transcript entries."""


class ScriptedFixtureError(BackendFailureError):
    """A scripted transcript entry expected a different live stage."""


class GuardrailExhaustedError(DdapError):
    """The corrective re-prompt budget was spent without a valid reply."""

    api_code = "guardrail_exhausted"


class RepairBudgetError(GuardrailExhaustedError):
    """A code artifact has already used its full repair budget."""


class SandboxError(DdapError):
    """The execution environment itself failed (not the code under test)."""

    api_code = "sandbox_error"


class MetricInputError(ValidationFailedError):
    """Metric inputs were malformed (length mismatch, non-finite values)."""


class MetricPreconditionError(ValidationFailedError):
    """Metric preconditions were not met (e.g. fewer than two clusters)."""
