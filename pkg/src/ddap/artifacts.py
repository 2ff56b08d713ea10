"""Artifact document schemas, validation, and canonical serialization.

Artifacts are plain JSON documents (dicts). Four kinds are produced by a
session, in order: problem definition, compute spec, pipeline set, and code.
A preprocessing plan is validated the same way; it is folded into the
pipeline set but also persisted on its own for inspection.

Documents keep unknown extra fields: validation checks the declared schema
and ignores anything else, so richer agent outputs survive a round trip.
The canonical on-disk/in-prompt form is sorted-key, no-whitespace JSON,
which makes content hashes, file bytes, and prompt sections line up exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import UnknownArtifactKindError

PROBLEM_DEFINITION = "problem_definition"
COMPUTE_SPEC = "compute_spec"
PIPELINE_SET = "pipeline_set"
CODE_ARTIFACT = "code_artifact"
PREPROCESSING_PLAN = "preprocessing_plan"

#: The four persisted artifact kinds, in workflow order.
ARTIFACT_KINDS = (PROBLEM_DEFINITION, COMPUTE_SPEC, PIPELINE_SET, CODE_ARTIFACT)

#: Everything validate_artifact knows how to check.
VALIDATABLE_KINDS = ARTIFACT_KINDS + (PREPROCESSING_PLAN,)

SCHEMA_VERSION = 1

EXPERTISE_LEVELS = ("novice", "intermediate", "expert")
TASK_TYPES = ("classification", "regression", "clustering", "other")
MODALITIES = ("image", "text", "tabular", "time_series", "mixed")
LOCATIONS = ("on_premises", "cloud", "hybrid")
ACCELERATOR_KINDS = ("gpu", "tpu", "cpu_only")

CANDIDATE_COUNT = 5


@dataclass(frozen=True)
class Violation:
    field_path: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    valid: bool
    violations: tuple[Violation, ...] = ()

    @classmethod
    def from_violations(cls, violations: list[Violation]) -> "ValidationReport":
        return cls(valid=not violations, violations=tuple(violations))

    def summary(self) -> str:
        return "; ".join(f"{v.field_path}: {v.message}" for v in self.violations)


def canonical_text(document: dict) -> str:
    """Sorted-key, no-whitespace JSON; the single serialization used for
    stored artifact bytes, content hashing, and prompt embedding."""
    return json.dumps(document, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def canonical_bytes(document: dict) -> bytes:
    return canonical_text(document).encode("utf-8")


def parse_document(text: str | bytes) -> dict:
    doc = json.loads(text)
    if not isinstance(doc, dict):
        raise ValueError("artifact document must be a JSON object")
    return doc


def wrap_document(kind: str, document: dict) -> dict:
    """Return a copy carrying the canonical top-level envelope fields."""
    doc = dict(document)
    doc.setdefault("artifact_kind", kind)
    doc.setdefault("schema_version", SCHEMA_VERSION)
    return doc


# ---------------------------------------------------------------------------
# field checkers
# ---------------------------------------------------------------------------

def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _check_wrapper(kind: str, doc: dict, out: list[Violation]) -> None:
    if "artifact_kind" in doc and doc["artifact_kind"] != kind:
        out.append(Violation("artifact_kind", f"expected {kind!r}, got {doc['artifact_kind']!r}"))
    if "schema_version" in doc and doc["schema_version"] != SCHEMA_VERSION:
        out.append(Violation("schema_version", f"expected {SCHEMA_VERSION}, got {doc['schema_version']!r}"))


def _req_str(doc: dict, key: str, out: list[Violation], prefix: str = "") -> str | None:
    path = prefix + key
    value = doc.get(key)
    if not isinstance(value, str) or not value.strip():
        out.append(Violation(path, "required nonempty string"))
        return None
    return value


def _opt_str(doc: dict, key: str, out: list[Violation], prefix: str = "") -> None:
    if key in doc and not isinstance(doc[key], str):
        out.append(Violation(prefix + key, "must be a string"))


def _req_enum(doc: dict, key: str, allowed: tuple, out: list[Violation], prefix: str = "") -> None:
    path = prefix + key
    value = doc.get(key)
    if value not in allowed:
        out.append(Violation(path, f"must be one of {list(allowed)}, got {value!r}"))


def _opt_enum(doc: dict, key: str, allowed: tuple, out: list[Violation], prefix: str = "") -> None:
    if key in doc and doc[key] not in allowed:
        out.append(Violation(prefix + key, f"must be one of {list(allowed)}, got {doc[key]!r}"))


def _str_list(doc: dict, key: str, out: list[Violation], prefix: str = "",
              required: bool = False, nonempty: bool = False) -> None:
    path = prefix + key
    if key not in doc:
        if required:
            out.append(Violation(path, "required list"))
        return
    value = doc[key]
    if not isinstance(value, list):
        out.append(Violation(path, "must be a list"))
        return
    if nonempty and not value:
        out.append(Violation(path, "must not be empty"))
    for i, item in enumerate(value):
        if not isinstance(item, str) or not item.strip():
            out.append(Violation(f"{path}[{i}]", "must be a nonempty string"))


def _safe_relative_path(path: str) -> bool:
    if not path or path.startswith("/") or "\\" in path:
        return False
    parts = path.split("/")
    return all(part not in ("", ".", "..") for part in parts)


# ---------------------------------------------------------------------------
# per-kind validators
# ---------------------------------------------------------------------------

def _validate_problem_definition(doc: dict) -> list[Violation]:
    out: list[Violation] = []
    _opt_str(doc, "domain", out)
    _opt_enum(doc, "user_expertise", EXPERTISE_LEVELS, out)
    _req_enum(doc, "task_type", TASK_TYPES, out)
    _req_str(doc, "objective", out)

    data = doc.get("data_description")
    if not isinstance(data, dict):
        out.append(Violation("data_description", "required object"))
    else:
        _req_enum(data, "modality", MODALITIES, out, "data_description.")
        if "record_count" in data:
            rc = data["record_count"]
            if not isinstance(rc, int) or isinstance(rc, bool) or rc < 0:
                out.append(Violation("data_description.record_count", "must be a nonnegative integer"))
        _opt_str(data, "feature_summary", out, "data_description.")
        _opt_str(data, "target_description", out, "data_description.")

    _str_list(doc, "constraints", out)
    _str_list(doc, "success_metrics", out, required=True, nonempty=True)
    return out


def _validate_compute_spec(doc: dict) -> list[Violation]:
    out: list[Violation] = []
    _req_enum(doc, "location", LOCATIONS, out)

    accs = doc.get("accelerators")
    if not isinstance(accs, list) or not accs:
        out.append(Violation("accelerators", "required nonempty list (cpu_only counts as an entry)"))
    else:
        for i, acc in enumerate(accs):
            prefix = f"accelerators[{i}]."
            if not isinstance(acc, dict):
                out.append(Violation(f"accelerators[{i}]", "must be an object"))
                continue
            _req_enum(acc, "kind", ACCELERATOR_KINDS, out, prefix)
            count = acc.get("count")
            if not isinstance(count, int) or isinstance(count, bool) or count < 1:
                out.append(Violation(prefix + "count", "must be a positive integer"))
            if "memory_gb" in acc and (not _is_number(acc["memory_gb"]) or acc["memory_gb"] < 0):
                out.append(Violation(prefix + "memory_gb", "must be a nonnegative number"))

    storage = doc.get("storage_gb")
    if not _is_number(storage) or storage < 0:
        out.append(Violation("storage_gb", "must be a nonnegative number"))

    if "budget" in doc:
        budget = doc["budget"]
        if budget == "unconstrained":
            pass
        elif isinstance(budget, dict):
            amount = budget.get("amount")
            if not _is_number(amount) or amount < 0:
                out.append(Violation("budget.amount", "must be a nonnegative number"))
            _req_str(budget, "currency", out, "budget.")
        else:
            out.append(Violation("budget", 'must be an {amount, currency} object or "unconstrained"'))

    _opt_str(doc, "preferred_ml_platform", out)
    return out


def _validate_preprocessing_plan(doc: dict, prefix: str = "") -> list[Violation]:
    out: list[Violation] = []
    steps = doc.get("steps")
    if not isinstance(steps, list) or not steps:
        out.append(Violation(prefix + "steps", "required nonempty list of steps"))
        return out
    seen: set[str] = set()
    for i, step in enumerate(steps):
        path = f"{prefix}steps[{i}]"
        if not isinstance(step, dict):
            out.append(Violation(path, "must be an object"))
            continue
        name = _req_str(step, "name", out, path + ".")
        _opt_str(step, "description", out, path + ".")
        _opt_str(step, "rationale", out, path + ".")
        if name is not None:
            if name in seen:
                out.append(Violation(path + ".name", f"duplicate step name {name!r}"))
            seen.add(name)
    return out


def _validate_pipeline_set(doc: dict) -> list[Violation]:
    out: list[Violation] = []
    plan = doc.get("preprocessing")
    step_names: set[str] = set()
    if not isinstance(plan, dict):
        out.append(Violation("preprocessing", "required preprocessing plan object"))
    else:
        out.extend(_validate_preprocessing_plan(plan, "preprocessing."))
        steps = plan.get("steps")
        if isinstance(steps, list):
            step_names = {s.get("name") for s in steps if isinstance(s, dict)}

    candidates = doc.get("candidates")
    if not isinstance(candidates, list):
        out.append(Violation("candidates", "required list of candidates"))
        return out
    if len(candidates) != CANDIDATE_COUNT:
        out.append(Violation(
            "candidates",
            f"expected exactly {CANDIDATE_COUNT} candidates, got {len(candidates)}"))

    seen_indices: set[int] = set()
    for i, cand in enumerate(candidates):
        path = f"candidates[{i}]"
        if not isinstance(cand, dict):
            out.append(Violation(path, "must be an object"))
            continue
        index = cand.get("index")
        if not isinstance(index, int) or isinstance(index, bool) or not 1 <= index <= CANDIDATE_COUNT:
            out.append(Violation(path + ".index", f"must be an integer in 1..{CANDIDATE_COUNT}"))
        else:
            if index in seen_indices:
                out.append(Violation(path + ".index", f"duplicate candidate index {index}"))
            seen_indices.add(index)
        _req_str(cand, "name", out, path + ".")
        _opt_str(cand, "description", out, path + ".")
        _opt_str(cand, "model_family", out, path + ".")
        _opt_str(cand, "training_procedure", out, path + ".")
        _str_list(cand, "evaluation_metrics", out, path + ".")
        _str_list(cand, "pros", out, path + ".", required=True, nonempty=True)
        _str_list(cand, "cons", out, path + ".", required=True, nonempty=True)
        refs = cand.get("preprocessing_refs")
        if refs is not None:
            if not isinstance(refs, list):
                out.append(Violation(path + ".preprocessing_refs", "must be a list"))
            else:
                for j, ref in enumerate(refs):
                    if ref not in step_names:
                        out.append(Violation(
                            f"{path}.preprocessing_refs[{j}]",
                            f"{ref!r} is not a preprocessing step name"))
    return out


def _validate_code_artifact(doc: dict) -> list[Violation]:
    out: list[Violation] = []
    index = doc.get("candidate_index")
    if not isinstance(index, int) or isinstance(index, bool) or not 1 <= index <= CANDIDATE_COUNT:
        out.append(Violation("candidate_index", f"must be an integer in 1..{CANDIDATE_COUNT}"))

    files = doc.get("files")
    paths: set[str] = set()
    if not isinstance(files, list) or not files:
        out.append(Violation("files", "required nonempty list of files"))
    else:
        for i, entry in enumerate(files):
            path = f"files[{i}]"
            if not isinstance(entry, dict):
                out.append(Violation(path, "must be an object"))
                continue
            rel = entry.get("relative_path")
            if not isinstance(rel, str) or not _safe_relative_path(rel):
                out.append(Violation(path + ".relative_path", "must be a safe relative path"))
            elif rel in paths:
                out.append(Violation(path + ".relative_path", f"duplicate file path {rel!r}"))
            else:
                paths.add(rel)
            if not isinstance(entry.get("content"), str):
                out.append(Violation(path + ".content", "required string"))

    entrypoint = doc.get("entrypoint")
    if not isinstance(entrypoint, str) or not entrypoint:
        out.append(Violation("entrypoint", "required relative path"))
    elif paths and entrypoint not in paths:
        out.append(Violation("entrypoint", f"{entrypoint!r} does not name any listed file"))

    _opt_str(doc, "platform", out)

    repairs = doc.get("repair_count")
    if not isinstance(repairs, int) or isinstance(repairs, bool) or repairs < 0:
        out.append(Violation("repair_count", "must be a nonnegative integer"))
    return out


_VALIDATORS = {
    PROBLEM_DEFINITION: _validate_problem_definition,
    COMPUTE_SPEC: _validate_compute_spec,
    PIPELINE_SET: _validate_pipeline_set,
    CODE_ARTIFACT: _validate_code_artifact,
    PREPROCESSING_PLAN: _validate_preprocessing_plan,
}


def validate_artifact(kind: str, document) -> ValidationReport:
    """Check a document against its kind's schema.

    Pure: the document is never modified and two calls yield equal reports.
    Unknown extra fields pass through untouched; only declared fields and
    invariants are checked.
    """
    if kind not in _VALIDATORS:
        raise UnknownArtifactKindError(f"unknown artifact kind {kind!r}")
    if not isinstance(document, dict):
        return ValidationReport.from_violations(
            [Violation("", "document must be a JSON object")])
    violations: list[Violation] = []
    _check_wrapper(kind, document, violations)
    violations.extend(_VALIDATORS[kind](document))
    return ValidationReport.from_violations(violations)
