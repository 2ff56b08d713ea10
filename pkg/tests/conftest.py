"""Shared fixtures for the ddap test suite."""

import json
from pathlib import Path

import pytest

from ddap.agents.backends import ScriptedBackend, TranscriptEntry, load_transcript
from ddap.store import ArtifactStore

FIXTURES = Path(__file__).parent / "fixtures"

# Criterion labels printed in the summary block, keyed by test name.
ACCEPTANCE_LABELS = {
    "test_metric_oracle_suite": "metric oracle suite (>=200 randomized instances, 1e-9, <5s)",
    "test_metric_spot_checks": "metric spot checks (f1, mae, silhouette fixtures)",
    "test_end_to_end_scripted_run": "end-to-end scripted run (layout, 5 candidates, byte-identical rerun, <2s)",
    "test_repair_contract": "repair contract (one repair prompt, counters, bounded failure)",
    "test_reuse_contract": "reuse contract (imported spec skips its stage, verbatim prompt bytes)",
    "test_guardrail_reprompt_then_recover": "guardrail contract (two re-prompts then success)",
    "test_guardrail_exhaustion": "guardrail contract (third malformed reply fails the stage)",
    "test_stage_invariants_property": "stage monotonicity and artifact precedence (1000 schedules)",
    "test_api_cli_equivalence": "API/CLI equivalence (byte-identical artifacts)",
}

_acceptance_results = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        _acceptance_results[name] = report.outcome
    elif report.failed:
        # setup/teardown error counts as a failed criterion
        _acceptance_results[name] = "failed"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for name, label in ACCEPTANCE_LABELS.items():
        outcome = _acceptance_results.get(name)
        if outcome is None:
            continue
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {label}")


@pytest.fixture
def store(tmp_path):
    return ArtifactStore(tmp_path / "data")


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def canonical_transcript():
    return load_transcript(FIXTURES / "canonical_transcript.json")


@pytest.fixture
def canonical_backend(canonical_transcript):
    return ScriptedBackend(canonical_transcript)


@pytest.fixture
def intent_text():
    return (FIXTURES / "intent.txt").read_text(encoding="utf-8").strip()


@pytest.fixture
def answers_list():
    lines = (FIXTURES / "answers.txt").read_text(encoding="utf-8").splitlines()
    return [line for line in lines if line.strip()]


def load_fixture_payloads():
    """Final payloads from the canonical transcript, in stage order.

    Returns (problem, compute, plan, pipeline_set, code) as plain dicts.
    """
    entries = json.loads((FIXTURES / "canonical_transcript.json").read_text(encoding="utf-8"))
    finals = []
    for entry in entries:
        body = json.loads(entry["response"])
        if body["status"] == "final":
            finals.append(body["payload"])
    assert len(finals) == 5
    return tuple(finals)


@pytest.fixture
def fixture_payloads():
    return load_fixture_payloads()


def question_entry(stage=None, message="Could you clarify?"):
    return TranscriptEntry(
        response=json.dumps({"status": "question", "message": message}),
        expect_stage=stage,
    )


def final_entry(payload, stage=None, message="Here it is."):
    return TranscriptEntry(
        response=json.dumps({"status": "final", "message": message, "payload": payload}),
        expect_stage=stage,
    )


def prose_entry(stage=None):
    return TranscriptEntry(response="Sure! Let me think about that.", expect_stage=stage)


@pytest.fixture
def make_question():
    return question_entry


@pytest.fixture
def make_final():
    return final_entry


@pytest.fixture
def make_prose():
    return prose_entry
