"""Schema validation and canonical serialization."""

import copy
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ddap.artifacts import (
    ARTIFACT_KINDS,
    CODE_ARTIFACT,
    COMPUTE_SPEC,
    PIPELINE_SET,
    PREPROCESSING_PLAN,
    PROBLEM_DEFINITION,
    SCHEMA_VERSION,
    canonical_bytes,
    canonical_text,
    parse_document,
    validate_artifact,
    wrap_document,
)
from ddap.errors import UnknownArtifactKindError

from conftest import load_fixture_payloads


@pytest.fixture(scope="module")
def payloads():
    problem, compute, plan, pipes, code = load_fixture_payloads()
    # a pipeline set carries its preprocessing plan embedded, and a code
    # artifact its normalized bookkeeping fields
    full_set = dict(pipes)
    full_set["preprocessing"] = plan
    full_code = dict(code)
    full_code.update(candidate_index=1, repair_count=0, platform="pytorch")
    return {
        PROBLEM_DEFINITION: problem,
        COMPUTE_SPEC: compute,
        PREPROCESSING_PLAN: plan,
        PIPELINE_SET: full_set,
        CODE_ARTIFACT: full_code,
    }


def violations(kind, doc):
    return [v.field_path for v in validate_artifact(kind, doc).violations]


# --- canonical form ---------------------------------------------------------

def test_canonical_text_is_sorted_and_compact():
    doc = {"b": 1, "a": {"z": [1, 2], "y": None}}
    assert canonical_text(doc) == '{"a":{"y":null,"z":[1,2]},"b":1}'


def test_canonical_text_keeps_unicode():
    assert canonical_text({"name": "émilie"}) == '{"name":"émilie"}'


def test_canonical_bytes_round_trip(payloads):
    for kind, payload in payloads.items():
        doc = wrap_document(kind, payload)
        again = parse_document(canonical_bytes(doc))
        assert again == doc
        assert canonical_bytes(again) == canonical_bytes(doc)


def test_wrap_document_adds_envelope_once(payloads):
    doc = wrap_document(PROBLEM_DEFINITION, payloads[PROBLEM_DEFINITION])
    assert doc["artifact_kind"] == PROBLEM_DEFINITION
    assert doc["schema_version"] == SCHEMA_VERSION
    assert wrap_document(PROBLEM_DEFINITION, doc) == doc


def test_wrap_document_does_not_mutate(payloads):
    payload = copy.deepcopy(payloads[COMPUTE_SPEC])
    wrap_document(COMPUTE_SPEC, payload)
    assert payload == payloads[COMPUTE_SPEC]


json_values = st.recursive(
    st.none() | st.booleans() | st.integers(-10**6, 10**6)
    | st.floats(allow_nan=False, allow_infinity=False, width=32)
    | st.text(max_size=20),
    lambda children: st.lists(children, max_size=4)
    | st.dictionaries(st.text(max_size=8), children, max_size=4),
    max_leaves=12,
)


@given(st.dictionaries(st.text(max_size=8), json_values, max_size=6))
def test_canonical_form_is_stable(doc):
    text = canonical_text(doc)
    assert parse_document(text.encode("utf-8")) == json.loads(text)
    assert canonical_text(json.loads(text)) == text


# --- per-kind validation ------------------------------------------------------

def test_fixture_payloads_validate(payloads):
    for kind, payload in payloads.items():
        report = validate_artifact(kind, wrap_document(kind, payload))
        assert report.valid, f"{kind}: {report.summary()}"


def test_unknown_kind_raises():
    with pytest.raises(UnknownArtifactKindError):
        validate_artifact("mystery", {})


def test_wrapper_mismatch_flagged(payloads):
    doc = wrap_document(COMPUTE_SPEC, payloads[COMPUTE_SPEC])
    doc["artifact_kind"] = PROBLEM_DEFINITION
    assert "artifact_kind" in violations(COMPUTE_SPEC, doc)
    doc["artifact_kind"] = COMPUTE_SPEC
    doc["schema_version"] = 99
    assert "schema_version" in violations(COMPUTE_SPEC, doc)


def test_validation_is_pure(payloads):
    doc = wrap_document(PIPELINE_SET, payloads[PIPELINE_SET])
    before = copy.deepcopy(doc)
    first = validate_artifact(PIPELINE_SET, doc)
    second = validate_artifact(PIPELINE_SET, doc)
    assert doc == before
    assert first.valid == second.valid
    assert [v.field_path for v in first.violations] == \
        [v.field_path for v in second.violations]


def test_problem_definition_requirements(payloads):
    base = payloads[PROBLEM_DEFINITION]

    doc = copy.deepcopy(base)
    del doc["objective"]
    assert "objective" in violations(PROBLEM_DEFINITION, doc)

    doc = copy.deepcopy(base)
    doc["task_type"] = "divination"
    assert "task_type" in violations(PROBLEM_DEFINITION, doc)

    doc = copy.deepcopy(base)
    doc["data_description"]["record_count"] = -3
    assert "data_description.record_count" in violations(PROBLEM_DEFINITION, doc)

    doc = copy.deepcopy(base)
    doc["data_description"]["modality"] = "smoke signals"
    assert "data_description.modality" in violations(PROBLEM_DEFINITION, doc)

    doc = copy.deepcopy(base)
    doc["success_metrics"] = []
    assert "success_metrics" in violations(PROBLEM_DEFINITION, doc)

    doc = copy.deepcopy(base)
    doc["success_metrics"] = ["accuracy", ""]
    assert "success_metrics[1]" in violations(PROBLEM_DEFINITION, doc)


def test_compute_spec_requirements(payloads):
    base = payloads[COMPUTE_SPEC]

    doc = copy.deepcopy(base)
    doc["location"] = "basement"
    assert "location" in violations(COMPUTE_SPEC, doc)

    doc = copy.deepcopy(base)
    doc["accelerators"] = []
    assert "accelerators" in violations(COMPUTE_SPEC, doc)

    doc = copy.deepcopy(base)
    doc["accelerators"][0]["count"] = 0
    assert "accelerators[0].count" in violations(COMPUTE_SPEC, doc)

    doc = copy.deepcopy(base)
    doc["storage_gb"] = -1
    assert "storage_gb" in violations(COMPUTE_SPEC, doc)

    doc = copy.deepcopy(base)
    doc["budget"] = "unconstrained"
    assert validate_artifact(COMPUTE_SPEC, doc).valid

    doc = copy.deepcopy(base)
    doc["budget"] = {"amount": -5, "currency": "USD"}
    assert "budget.amount" in violations(COMPUTE_SPEC, doc)

    doc = copy.deepcopy(base)
    doc["budget"] = 12
    assert "budget" in violations(COMPUTE_SPEC, doc)


def test_preprocessing_plan_requirements(payloads):
    base = payloads[PREPROCESSING_PLAN]

    doc = copy.deepcopy(base)
    doc["steps"] = []
    assert "steps" in violations(PREPROCESSING_PLAN, doc)

    doc = copy.deepcopy(base)
    doc["steps"].append(dict(doc["steps"][0]))
    paths = violations(PREPROCESSING_PLAN, doc)
    assert any(p.endswith(".name") for p in paths), paths

    doc = copy.deepcopy(base)
    del doc["steps"][0]["name"]
    assert "steps[0].name" in violations(PREPROCESSING_PLAN, doc)


def test_pipeline_set_requires_exactly_five(payloads):
    doc = copy.deepcopy(wrap_document(PIPELINE_SET, payloads[PIPELINE_SET]))
    doc["candidates"] = doc["candidates"][:4]
    report = validate_artifact(PIPELINE_SET, doc)
    assert not report.valid
    assert any("expected exactly 5 candidates, got 4" in v.message
               for v in report.violations)

    doc = copy.deepcopy(wrap_document(PIPELINE_SET, payloads[PIPELINE_SET]))
    doc["candidates"].append(copy.deepcopy(doc["candidates"][0]))
    report = validate_artifact(PIPELINE_SET, doc)
    assert any("got 6" in v.message for v in report.violations)


def test_pipeline_set_candidate_rules(payloads):
    base = wrap_document(PIPELINE_SET, payloads[PIPELINE_SET])

    doc = copy.deepcopy(base)
    doc["candidates"][2]["index"] = doc["candidates"][1]["index"]
    assert "candidates[2].index" in violations(PIPELINE_SET, doc)

    doc = copy.deepcopy(base)
    doc["candidates"][0]["pros"] = []
    assert "candidates[0].pros" in violations(PIPELINE_SET, doc)

    doc = copy.deepcopy(base)
    del doc["candidates"][4]["cons"]
    assert "candidates[4].cons" in violations(PIPELINE_SET, doc)

    doc = copy.deepcopy(base)
    doc["candidates"][1]["preprocessing_refs"] = ["not_a_step"]
    assert "candidates[1].preprocessing_refs[0]" in violations(PIPELINE_SET, doc)

    doc = copy.deepcopy(base)
    del doc["preprocessing"]
    assert "preprocessing" in violations(PIPELINE_SET, doc)


def test_code_artifact_requirements(payloads):
    base = wrap_document(CODE_ARTIFACT, payloads[CODE_ARTIFACT])

    doc = copy.deepcopy(base)
    doc["candidate_index"] = 6
    assert "candidate_index" in violations(CODE_ARTIFACT, doc)

    doc = copy.deepcopy(base)
    doc["entrypoint"] = "missing.py"
    assert "entrypoint" in violations(CODE_ARTIFACT, doc)

    doc = copy.deepcopy(base)
    doc["files"][0]["relative_path"] = "/etc/passwd"
    assert "files[0].relative_path" in violations(CODE_ARTIFACT, doc)

    doc = copy.deepcopy(base)
    doc["files"][0]["relative_path"] = "../escape.py"
    assert "files[0].relative_path" in violations(CODE_ARTIFACT, doc)

    doc = copy.deepcopy(base)
    doc["files"].append(dict(doc["files"][0]))
    paths = violations(CODE_ARTIFACT, doc)
    assert any("relative_path" in p for p in paths)

    doc = copy.deepcopy(base)
    doc["files"] = []
    assert "files" in violations(CODE_ARTIFACT, doc)

    doc = copy.deepcopy(base)
    doc["repair_count"] = -1
    assert "repair_count" in violations(CODE_ARTIFACT, doc)


def test_extra_fields_pass_through(payloads):
    doc = wrap_document(PROBLEM_DEFINITION, payloads[PROBLEM_DEFINITION])
    doc["annotations"] = {"reviewed_by": "pi"}
    report = validate_artifact(PROBLEM_DEFINITION, doc)
    assert report.valid
    assert parse_document(canonical_bytes(doc))["annotations"] == {"reviewed_by": "pi"}


def test_artifact_kinds_enumeration():
    assert set(ARTIFACT_KINDS) == {
        PROBLEM_DEFINITION, COMPUTE_SPEC, PIPELINE_SET, CODE_ARTIFACT}
