"""ddap: a staged, human-in-the-loop engine that turns research intent into
a problem definition, a compute specification, five candidate pipelines,
and executable code, with sandboxed execution and bounded self-repair."""

from .artifacts import canonical_bytes, canonical_text, validate_artifact
from .errors import DdapError
from .orchestrator import ArtifactSet, Orchestrator, SessionState, TurnResult, run_headless
from .sandbox import ExecutionResult, SandboxLimits, execute_code, repair_code, run_with_repair
from .store import ArtifactRef, ArtifactStore

__version__ = "0.1.0"

__all__ = [
    "ArtifactRef",
    "ArtifactSet",
    "ArtifactStore",
    "DdapError",
    "ExecutionResult",
    "Orchestrator",
    "SandboxLimits",
    "SessionState",
    "TurnResult",
    "canonical_bytes",
    "canonical_text",
    "execute_code",
    "repair_code",
    "run_headless",
    "run_with_repair",
    "validate_artifact",
    "__version__",
]
