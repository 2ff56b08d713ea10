"""Disk-backed artifact and session store.

Layout under the data root:

    sessions/<session_id>/
        session.json
        artifacts/
            a1_problem.json
            a2_compute.json
            preprocessing.json
            a3_pipelines.json
            a4_code_<k>/           one directory per code candidate
                manifest.json      written last, acts as the commit marker
                <files...>         verbatim source files
        logs/<stage>.jsonl

JSON artifacts are stored as canonical bytes (sorted keys, no whitespace),
so the stored file, the content hash input, and the text embedded in
prompts are all the same byte sequence. Writes go through a temp file and
an atomic rename; code directories write their files first and the
manifest last, so a manifest's presence implies a complete directory.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import tempfile
import time
import uuid
from dataclasses import dataclass
from pathlib import Path

from .artifacts import (
    CODE_ARTIFACT,
    COMPUTE_SPEC,
    PIPELINE_SET,
    PREPROCESSING_PLAN,
    PROBLEM_DEFINITION,
    canonical_bytes,
    canonical_text,
    validate_artifact,
    wrap_document,
)
from .errors import CorruptArtifactError, NotFoundError, ValidationFailedError

ENV_DATA_DIR = "DDAP_DATA_DIR"
DEFAULT_DATA_DIR = "~/.ddap"

JSON_FILENAMES = {
    PROBLEM_DEFINITION: "a1_problem.json",
    COMPUTE_SPEC: "a2_compute.json",
    PREPROCESSING_PLAN: "preprocessing.json",
    PIPELINE_SET: "a3_pipelines.json",
}
KIND_BY_FILENAME = {v: k for k, v in JSON_FILENAMES.items()}

_SESSION_ID_RE = re.compile(r"^[a-z0-9][a-z0-9-]{0,63}$")
_CODE_DIR_RE = re.compile(r"^a4_code_(\d+)(?:_r(\d+))?$")


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def content_hash(document: dict) -> str:
    """Hash of the canonical serialization of a JSON document."""
    return sha256_hex(canonical_bytes(document))


def new_session_id() -> str:
    return uuid.uuid4().hex[:12]


@dataclass(frozen=True)
class ArtifactRef:
    """Stable pointer to a stored artifact: its location plus content hash."""

    session_id: str
    kind: str
    path: str
    sha256: str

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "kind": self.kind,
            "path": self.path,
            "sha256": self.sha256,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ArtifactRef":
        return cls(session_id=data["session_id"], kind=data["kind"],
                   path=data["path"], sha256=data["sha256"])


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


class ArtifactStore:
    """All filesystem access for sessions, artifacts, and stage logs."""

    def __init__(self, root: str | Path | None = None):
        if root is None:
            root = os.environ.get(ENV_DATA_DIR, DEFAULT_DATA_DIR)
        self.root = Path(root).expanduser()
        self.sessions_dir = self.root / "sessions"
        self.sessions_dir.mkdir(parents=True, exist_ok=True)

    # -- paths ---------------------------------------------------------

    def session_dir(self, session_id: str) -> Path:
        if not _SESSION_ID_RE.match(session_id):
            raise NotFoundError(f"invalid session id {session_id!r}")
        return self.sessions_dir / session_id

    def artifacts_dir(self, session_id: str) -> Path:
        return self.session_dir(session_id) / "artifacts"

    def _resolve_ref_path(self, ref_path: str) -> Path:
        candidate = (self.root / ref_path).resolve()
        root = self.root.resolve()
        if root != candidate and root not in candidate.parents:
            raise NotFoundError(f"artifact path {ref_path!r} escapes the store")
        return candidate

    # -- sessions ------------------------------------------------------

    def create_session(self, state: dict) -> None:
        sid = state["session_id"]
        target = self.session_dir(sid)
        if target.exists():
            raise CorruptArtifactError(f"session {sid} already exists")
        target.mkdir(parents=True)
        (target / "artifacts").mkdir()
        (target / "logs").mkdir()
        self.save_session(state)

    def save_session(self, state: dict) -> None:
        sid = state["session_id"]
        path = self.session_dir(sid) / "session.json"
        _atomic_write(path, json.dumps(state, sort_keys=True, indent=2).encode("utf-8"))

    def load_session(self, session_id: str) -> dict:
        path = self.session_dir(session_id) / "session.json"
        if not path.exists():
            raise NotFoundError(f"session {session_id} not found")
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except ValueError as exc:
            raise CorruptArtifactError(
                f"session {session_id} state is not valid JSON: {exc}") from exc

    def list_sessions(self) -> list[str]:
        return sorted(p.name for p in self.sessions_dir.iterdir()
                      if (p / "session.json").exists())

    # -- logs ----------------------------------------------------------

    def append_log(self, session_id: str, stage: str, record: dict) -> None:
        path = self.session_dir(session_id) / "logs" / f"{stage}.jsonl"
        path.parent.mkdir(parents=True, exist_ok=True)
        entry = dict(record)
        entry.setdefault("ts", time.time())
        with path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")

    def read_log(self, session_id: str, stage: str) -> list[dict]:
        path = self.session_dir(session_id) / "logs" / f"{stage}.jsonl"
        if not path.exists():
            return []
        return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()
                if line.strip()]

    # -- JSON artifacts --------------------------------------------------

    def persist_artifact(self, session_id: str, kind: str, document: dict) -> ArtifactRef:
        """Validate, canonicalize, and atomically write a JSON artifact."""
        if kind not in JSON_FILENAMES:
            raise ValidationFailedError(f"kind {kind!r} is not a JSON artifact kind")
        document = wrap_document(kind, document)
        report = validate_artifact(kind, document)
        if not report.valid:
            raise ValidationFailedError(
                f"{kind} failed validation: {report.summary()}", report=report)
        data = canonical_bytes(document)
        rel = f"sessions/{session_id}/artifacts/{JSON_FILENAMES[kind]}"
        _atomic_write(self.root / rel, data)
        return ArtifactRef(session_id=session_id, kind=kind, path=rel,
                           sha256=sha256_hex(data))

    def load_artifact(self, ref: ArtifactRef) -> dict:
        """Read an artifact back, verifying bytes against the ref hash."""
        path = self._resolve_ref_path(ref.path)
        if not path.exists():
            raise NotFoundError(f"artifact {ref.path} not found")
        data = path.read_bytes()
        digest = sha256_hex(data)
        if digest != ref.sha256:
            raise CorruptArtifactError(
                f"artifact {ref.path} hash mismatch: expected {ref.sha256}, got {digest}")
        try:
            document = json.loads(data.decode("utf-8"))
        except ValueError as exc:
            raise CorruptArtifactError(
                f"artifact {ref.path} is not valid JSON: {exc}") from exc
        report = validate_artifact(ref.kind, document)
        if not report.valid:
            raise CorruptArtifactError(
                f"artifact {ref.path} failed validation on load: {report.summary()}")
        return document

    def load_by_path(self, ref_path: str) -> tuple[dict, str]:
        """Read a JSON artifact by its store-relative path.

        Returns (document, sha256 of the stored bytes). The kind is inferred
        from the filename.
        """
        path = self._resolve_ref_path(ref_path)
        name = path.name
        if name not in KIND_BY_FILENAME:
            raise NotFoundError(f"{ref_path!r} does not name a JSON artifact")
        if not path.exists():
            raise NotFoundError(f"artifact {ref_path} not found")
        data = path.read_bytes()
        try:
            document = json.loads(data.decode("utf-8"))
        except ValueError as exc:
            raise CorruptArtifactError(
                f"artifact {ref_path} is not valid JSON: {exc}") from exc
        return document, sha256_hex(data)

    # -- code artifacts --------------------------------------------------

    def code_dir_name(self, candidate_index: int, repair_round: int = 0) -> str:
        if repair_round > 0:
            return f"a4_code_{candidate_index}_r{repair_round}"
        return f"a4_code_{candidate_index}"

    def persist_code_artifact(self, session_id: str, document: dict,
                              repair_round: int = 0) -> ArtifactRef:
        """Write a code artifact: files first, manifest last.

        The manifest is the canonical JSON document (including the file
        contents), so its hash covers every byte of the candidate.
        """
        document = wrap_document(CODE_ARTIFACT, document)
        report = validate_artifact(CODE_ARTIFACT, document)
        if not report.valid:
            raise ValidationFailedError(
                f"{CODE_ARTIFACT} failed validation: {report.summary()}", report=report)
        dirname = self.code_dir_name(document["candidate_index"], repair_round)
        rel_dir = f"sessions/{session_id}/artifacts/{dirname}"
        base = self.root / rel_dir
        base.mkdir(parents=True, exist_ok=True)
        for entry in document["files"]:
            file_path = base / entry["relative_path"]
            file_path.parent.mkdir(parents=True, exist_ok=True)
            _atomic_write(file_path, entry["content"].encode("utf-8"))
        data = canonical_bytes(document)
        _atomic_write(base / "manifest.json", data)
        rel = f"{rel_dir}/manifest.json"
        return ArtifactRef(session_id=session_id, kind=CODE_ARTIFACT, path=rel,
                           sha256=sha256_hex(data))

    def load_code_artifact(self, ref: ArtifactRef) -> dict:
        """Load a code artifact, checking manifest hash and file bytes."""
        manifest_path = self._resolve_ref_path(ref.path)
        if not manifest_path.exists():
            raise NotFoundError(f"code artifact {ref.path} not found")
        data = manifest_path.read_bytes()
        digest = sha256_hex(data)
        if digest != ref.sha256:
            raise CorruptArtifactError(
                f"code artifact {ref.path} hash mismatch: "
                f"expected {ref.sha256}, got {digest}")
        try:
            document = json.loads(data.decode("utf-8"))
        except ValueError as exc:
            raise CorruptArtifactError(
                f"code artifact {ref.path} manifest is not valid JSON: {exc}") from exc
        report = validate_artifact(CODE_ARTIFACT, document)
        if not report.valid:
            raise CorruptArtifactError(
                f"code artifact {ref.path} failed validation on load: {report.summary()}")
        base = manifest_path.parent
        for entry in document["files"]:
            file_path = base / entry["relative_path"]
            if not file_path.exists():
                raise CorruptArtifactError(
                    f"code artifact {ref.path} is missing file {entry['relative_path']}")
            if file_path.read_bytes() != entry["content"].encode("utf-8"):
                raise CorruptArtifactError(
                    f"code artifact {ref.path} file {entry['relative_path']} "
                    "does not match its manifest")
        return document

    def materialize_code(self, document: dict, target: Path) -> Path:
        """Write a code artifact's files into a target directory for execution."""
        target.mkdir(parents=True, exist_ok=True)
        for entry in document["files"]:
            file_path = target / entry["relative_path"]
            file_path.parent.mkdir(parents=True, exist_ok=True)
            file_path.write_text(entry["content"], encoding="utf-8")
        return target

    # -- cross-session reuse ---------------------------------------------

    def copy_artifact(self, ref: ArtifactRef, dest_session_id: str) -> ArtifactRef:
        """Import an artifact into another session, byte-for-byte identical."""
        if ref.kind == CODE_ARTIFACT:
            document = self.load_code_artifact(ref)
            src_dir = self._resolve_ref_path(ref.path).parent.name
            match = _CODE_DIR_RE.match(src_dir)
            repair_round = int(match.group(2)) if match and match.group(2) else 0
            new_ref = self.persist_code_artifact(dest_session_id, document,
                                                 repair_round=repair_round)
        else:
            document = self.load_artifact(ref)
            new_ref = self.persist_artifact(dest_session_id, ref.kind, document)
        if new_ref.sha256 != ref.sha256:
            raise CorruptArtifactError(
                f"import of {ref.path} changed content hash")
        return new_ref

    def find_ref(self, ref_path: str) -> ArtifactRef:
        """Rebuild an ArtifactRef for a store-relative path.

        The owning session's recorded refs are consulted so the returned
        hash reflects what the session committed, not just what is on disk.
        """
        parts = Path(ref_path).parts
        if len(parts) < 3 or parts[0] != "sessions":
            raise NotFoundError(f"{ref_path!r} is not a store artifact path")
        session_id = parts[1]
        state = self.load_session(session_id)
        for stored in state.get("artifact_refs", {}).values():
            if stored and stored.get("path") == ref_path:
                return ArtifactRef.from_dict(stored)
        for stored in state.get("code_refs", []):
            if stored.get("path") == ref_path:
                return ArtifactRef.from_dict(stored)
        raise NotFoundError(f"artifact {ref_path} is not recorded by session {session_id}")
