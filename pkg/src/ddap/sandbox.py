"""Isolated execution of generated code, plus the bounded repair loop.

Isolation is deliberately lightweight: each run gets a fresh temporary
workspace, a scrubbed environment, and a wall-clock timeout. That keeps a
confused program from touching session data or inheriting credentials, but
it is not a container; do not point it at hostile code.

Repair is a one-shot interaction by default: on failure, the failing files
and the stderr excerpt go back to the code agent for a corrected file set,
then the corrected program runs once more.
"""

from __future__ import annotations

import os
import shlex
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .agents.config import CODE_REPAIRER
from .agents.prompts import ConversationTurn, render_prompt
from .agents.protocol import guarded_exchange
from .artifacts import CODE_ARTIFACT, validate_artifact, wrap_document
from .errors import RepairBudgetError, SandboxError
from .store import ArtifactRef, ArtifactStore

ENV_TIMEOUT = "DDAP_SANDBOX_TIMEOUT_SECONDS"

DEFAULT_WALL_CLOCK_SECONDS = 600.0
DEFAULT_OUTPUT_TRUNCATION_BYTES = 65536
DEFAULT_INTERPRETER_TEMPLATE = "python3 {entrypoint}"
TIMEOUT_EXIT_STATUS = 124


@dataclass(frozen=True)
class SandboxLimits:
    wall_clock_seconds: float = DEFAULT_WALL_CLOCK_SECONDS
    output_truncation_bytes: int = DEFAULT_OUTPUT_TRUNCATION_BYTES
    interpreter_command_template: str = DEFAULT_INTERPRETER_TEMPLATE
    timeout_exit_status: int = TIMEOUT_EXIT_STATUS

    def __post_init__(self):
        if self.wall_clock_seconds <= 0:
            raise ValueError("wall_clock_seconds must be positive")
        if self.output_truncation_bytes < 1:
            raise ValueError("output_truncation_bytes must be positive")
        if self.interpreter_command_template.count("{entrypoint}") != 1:
            raise ValueError(
                "interpreter_command_template must contain exactly one "
                "{entrypoint} placeholder")

    @classmethod
    def from_env(cls, env: dict | None = None, **overrides) -> "SandboxLimits":
        env = dict(os.environ if env is None else env)
        raw = env.get(ENV_TIMEOUT)
        if raw is not None and "wall_clock_seconds" not in overrides:
            try:
                overrides["wall_clock_seconds"] = float(raw)
            except ValueError as exc:
                raise SandboxError(f"{ENV_TIMEOUT} must be a number, got {raw!r}") from exc
        return cls(**overrides)


@dataclass(frozen=True)
class ExecutionResult:
    exit_status: int
    stdout_excerpt: str
    stderr_excerpt: str
    duration_ms: int
    timed_out: bool

    @property
    def ok(self) -> bool:
        return self.exit_status == 0 and not self.timed_out

    def to_dict(self) -> dict:
        return {
            "exit_status": self.exit_status,
            "stdout_excerpt": self.stdout_excerpt,
            "stderr_excerpt": self.stderr_excerpt,
            "duration_ms": self.duration_ms,
            "timed_out": self.timed_out,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExecutionResult":
        return cls(exit_status=data["exit_status"],
                   stdout_excerpt=data["stdout_excerpt"],
                   stderr_excerpt=data["stderr_excerpt"],
                   duration_ms=data["duration_ms"],
                   timed_out=data["timed_out"])


def _scrubbed_env(workspace: Path) -> dict:
    env = {
        "PATH": os.environ.get("PATH", "/usr/local/bin:/usr/bin:/bin"),
        "HOME": str(workspace),
        "TMPDIR": str(workspace),
        "PYTHONDONTWRITEBYTECODE": "1",
        "PYTHONIOENCODING": "utf-8",
    }
    for key in ("LANG", "LC_ALL"):
        if key in os.environ:
            env[key] = os.environ[key]
    return env


def _head(text_bytes: bytes, cap: int) -> str:
    return text_bytes[:cap].decode("utf-8", errors="replace")


def _tail(text_bytes: bytes, cap: int) -> str:
    return text_bytes[-cap:].decode("utf-8", errors="replace")


def execute_code(document: dict, limits: SandboxLimits | None = None) -> ExecutionResult:
    """Materialize a code artifact into a fresh workspace and run it.

    stdout keeps its head, stderr keeps its tail: tracebacks end with the
    proximate error, so the tail is what a repair prompt needs.
    """
    limits = limits or SandboxLimits()
    workspace = Path(tempfile.mkdtemp(prefix="ddap-run-"))
    try:
        for entry in document["files"]:
            file_path = workspace / entry["relative_path"]
            file_path.parent.mkdir(parents=True, exist_ok=True)
            file_path.write_text(entry["content"], encoding="utf-8")
        command = shlex.split(
            limits.interpreter_command_template.format(entrypoint=document["entrypoint"]))
        start = time.monotonic()
        try:
            proc = subprocess.run(
                command,
                cwd=workspace,
                env=_scrubbed_env(workspace),
                capture_output=True,
                timeout=limits.wall_clock_seconds,
            )
        except subprocess.TimeoutExpired as exc:
            duration_ms = max(0, round((time.monotonic() - start) * 1000))
            return ExecutionResult(
                exit_status=limits.timeout_exit_status,
                stdout_excerpt=_head(exc.stdout or b"", limits.output_truncation_bytes),
                stderr_excerpt=_tail(exc.stderr or b"", limits.output_truncation_bytes),
                duration_ms=duration_ms,
                timed_out=True,
            )
        except FileNotFoundError as exc:
            raise SandboxError(
                f"interpreter not found for command {command!r}: {exc}") from exc
        duration_ms = max(0, round((time.monotonic() - start) * 1000))
        return ExecutionResult(
            exit_status=proc.returncode,
            stdout_excerpt=_head(proc.stdout, limits.output_truncation_bytes),
            stderr_excerpt=_tail(proc.stderr, limits.output_truncation_bytes),
            duration_ms=duration_ms,
            timed_out=False,
        )
    finally:
        shutil.rmtree(workspace, ignore_errors=True)


def _repair_request_text(document: dict, failure: ExecutionResult) -> str:
    sections = [
        "The generated program failed in the sandbox.",
        f"exit status: {failure.exit_status}",
        f"timed out: {str(failure.timed_out).lower()}",
        f"entrypoint: {document['entrypoint']}",
    ]
    for entry in document["files"]:
        sections.append(f"[file: {entry['relative_path']}]\n{entry['content']}")
    sections.append(f"[stderr excerpt]\n{failure.stderr_excerpt}")
    sections.append(
        "Return a corrected program. The payload must carry the complete file "
        "set: files (list of {path, content}) and entrypoint. Every file the "
        "program needs must be present; files you omit are dropped.")
    return "\n\n".join(sections)


def _repair_payload_check(original: dict):
    def check(payload: Optional[dict]):
        if payload is None:
            return ["payload is required"], None
        candidate = {
            "candidate_index": original["candidate_index"],
            "files": payload.get("files"),
            "entrypoint": payload.get("entrypoint"),
            "platform": payload.get("platform", original.get("platform")),
            "repair_count": original.get("repair_count", 0) + 1,
        }
        candidate = wrap_document(CODE_ARTIFACT, candidate)
        report = validate_artifact(CODE_ARTIFACT, candidate)
        if not report.valid:
            return [f"{v.field_path}: {v.message}" for v in report.violations], None
        return [], candidate
    return check


def repair_code(document: dict, failure: ExecutionResult, *, backend,
                max_repairs: int = 1,
                store: ArtifactStore | None = None,
                session_id: str | None = None,
                config=CODE_REPAIRER) -> tuple[dict, Optional[ArtifactRef]]:
    """One repair turn: failing code plus stderr in, corrected file set out.

    The budget check happens before any agent traffic. The repaired artifact
    is persisted next to the original when a store is supplied; the original
    is never touched.
    """
    if failure.ok:
        raise ValueError("repair_code requires a failing execution result")
    repair_count = document.get("repair_count", 0)
    if repair_count >= max_repairs:
        raise RepairBudgetError(
            f"repair budget exhausted: repair_count={repair_count}, "
            f"max_repairs={max_repairs}")
    conversation = [ConversationTurn(
        speaker="user", text=_repair_request_text(document, failure))]

    def render(conv):
        return render_prompt(config, [], [], conv)

    exchange = guarded_exchange(
        config, backend, conversation, render,
        payload_check=_repair_payload_check(document),
        allow_questions=False,
    )
    repaired = exchange.payload
    ref = None
    if store is not None and session_id is not None:
        ref = store.persist_code_artifact(session_id, repaired,
                                          repair_round=repaired["repair_count"])
    return repaired, ref


@dataclass
class RepairOutcome:
    result: ExecutionResult
    document: dict
    executions: list
    repairs_used: int
    refs: list


def run_with_repair(document: dict, *, backend,
                    limits: SandboxLimits | None = None,
                    max_repairs: int = 1,
                    store: ArtifactStore | None = None,
                    session_id: str | None = None) -> RepairOutcome:
    """Execute, and on failure repair and re-execute, up to max_repairs times.

    Returns the last execution result together with the artifact version
    that produced it. A run that is still failing when the budget is spent
    is returned as a failure, not raised.
    """
    executions = []
    refs = []
    current = document
    result = execute_code(current, limits)
    executions.append(result)
    repairs_used = 0
    while not result.ok and repairs_used < max_repairs:
        current, ref = repair_code(current, result, backend=backend,
                                   max_repairs=max_repairs,
                                   store=store, session_id=session_id)
        if ref is not None:
            refs.append(ref)
        repairs_used += 1
        result = execute_code(current, limits)
        executions.append(result)
    return RepairOutcome(result=result, document=current, executions=executions,
                         repairs_used=repairs_used, refs=refs)
