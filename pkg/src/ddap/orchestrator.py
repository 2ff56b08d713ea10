"""The staged state machine driving a session from intent to executable code.

Stages run strictly in order: problem_definition, compute_spec,
pipeline_generation, code_generation, done. The first two are dialogue
loops (the agent may ask clarifying questions); the third is two one-shot
steps (preprocessing plan, then the five-candidate pipeline set); the
fourth generates code per candidate. Every prompt embeds all prior
artifacts verbatim in their canonical serialization, and every accepted
artifact is validated and persisted before the stage advances.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

from .agents.config import AgentConfig, default_agent_configs
from .agents.prompts import ConversationTurn, render_prompt
from .agents.protocol import STATUS_QUESTION, guarded_exchange
from .agents.retrieval import Snippet
from .artifacts import (
    CANDIDATE_COUNT,
    CODE_ARTIFACT,
    COMPUTE_SPEC,
    PIPELINE_SET,
    PREPROCESSING_PLAN,
    PROBLEM_DEFINITION,
    validate_artifact,
    wrap_document,
)
from .errors import (
    CandidateRangeError,
    DdapError,
    GuardrailExhaustedError,
    StageOrderError,
    ValidationFailedError,
)
from .sandbox import ExecutionResult, repair_code
from .store import ArtifactRef, ArtifactStore, new_session_id

STAGE_PROBLEM = "problem_definition"
STAGE_COMPUTE = "compute_spec"
STAGE_PIPELINES = "pipeline_generation"
STAGE_CODE = "code_generation"
STAGE_DONE = "done"
STAGES = (STAGE_PROBLEM, STAGE_COMPUTE, STAGE_PIPELINES, STAGE_CODE, STAGE_DONE)

# conversation/log keys; stage 3 has two one-shot steps with fresh contexts
KEY_PREPROCESSING = "preprocessing"

DIALOGUE_STAGES = (STAGE_PROBLEM, STAGE_COMPUTE)
STAGE_ARTIFACT = {STAGE_PROBLEM: PROBLEM_DEFINITION, STAGE_COMPUTE: COMPUTE_SPEC}
DIALOGUE_AGENT = {STAGE_PROBLEM: "problem_definer", STAGE_COMPUTE: "compute_specifier"}

# which stage an imported artifact kind replaces, and whether it advances it
IMPORT_STAGE = {
    PROBLEM_DEFINITION: STAGE_PROBLEM,
    COMPUTE_SPEC: STAGE_COMPUTE,
    PREPROCESSING_PLAN: STAGE_PIPELINES,
    PIPELINE_SET: STAGE_PIPELINES,
    CODE_ARTIFACT: STAGE_CODE,
}
IMPORT_ADVANCES = {PROBLEM_DEFINITION, COMPUTE_SPEC, PIPELINE_SET}

CONTEXT_ORDER = (PROBLEM_DEFINITION, COMPUTE_SPEC, PREPROCESSING_PLAN, PIPELINE_SET)

TURN_AGENT_QUESTION = "agent_question"
TURN_STAGE_COMPLETE = "stage_complete"


@dataclass
class TurnResult:
    kind: str
    message: str
    artifact_ref: Optional[ArtifactRef] = None

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "message": self.message,
            "artifact_ref": self.artifact_ref.to_dict() if self.artifact_ref else None,
        }


@dataclass
class SessionState:
    session_id: str
    stage: str = STAGE_PROBLEM
    profile: Optional[dict] = None
    conversations: dict = field(default_factory=dict)
    artifact_refs: dict = field(default_factory=dict)
    code_refs: list = field(default_factory=list)
    selected_candidate: Optional[int] = None
    reprompt_counts: dict = field(default_factory=dict)
    executions: list = field(default_factory=list)
    created_at: float = field(default_factory=time.time)

    def conversation(self, key: str) -> list[ConversationTurn]:
        return self.conversations.setdefault(key, [])

    def ref(self, kind: str) -> Optional[ArtifactRef]:
        return self.artifact_refs.get(kind)

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "stage": self.stage,
            "profile": self.profile,
            "conversations": {
                key: [turn.to_dict() for turn in turns]
                for key, turns in self.conversations.items()
            },
            "artifact_refs": {
                kind: ref.to_dict() for kind, ref in self.artifact_refs.items()
            },
            "code_refs": [ref.to_dict() for ref in self.code_refs],
            "selected_candidate": self.selected_candidate,
            "reprompt_counts": dict(self.reprompt_counts),
            "executions": list(self.executions),
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SessionState":
        return cls(
            session_id=data["session_id"],
            stage=data["stage"],
            profile=data.get("profile"),
            conversations={
                key: [ConversationTurn.from_dict(t) for t in turns]
                for key, turns in data.get("conversations", {}).items()
            },
            artifact_refs={
                kind: ArtifactRef.from_dict(ref)
                for kind, ref in data.get("artifact_refs", {}).items()
            },
            code_refs=[ArtifactRef.from_dict(r) for r in data.get("code_refs", [])],
            selected_candidate=data.get("selected_candidate"),
            reprompt_counts=dict(data.get("reprompt_counts", {})),
            executions=list(data.get("executions", [])),
            created_at=data.get("created_at", 0.0),
        )

    def summary(self) -> dict:
        last = None
        for turns in self.conversations.values():
            for turn in turns:
                if last is None or turn.timestamp >= last.timestamp:
                    last = turn
        return {
            "session_id": self.session_id,
            "stage": self.stage,
            "selected_candidate": self.selected_candidate,
            "last_message": last.to_dict() if last else None,
            "artifact_refs": {k: r.to_dict() for k, r in self.artifact_refs.items()},
            "code_refs": [r.to_dict() for r in self.code_refs],
            "reprompt_counts": dict(self.reprompt_counts),
            "executions": list(self.executions),
        }


def _artifact_payload_check(kind: str, normalize=None):
    def check(payload):
        if payload is None:
            return ["payload is required"], None
        document = dict(payload)
        if normalize:
            document = normalize(document)
        document = wrap_document(kind, document)
        report = validate_artifact(kind, document)
        if not report.valid:
            return [f"{v.field_path}: {v.message}" for v in report.violations], None
        return [], document
    return check


class Orchestrator:
    """Coordinates agents, validation, persistence, and stage transitions."""

    def __init__(self, store: ArtifactStore, backend,
                 configs: Optional[dict[str, AgentConfig]] = None,
                 max_repairs: int = 1,
                 retriever=None):
        self.store = store
        self.backend = backend
        self.configs = configs or default_agent_configs()
        self.max_repairs = max_repairs
        # optional callable (query, k) -> list[Snippet]; retrieval is off by default
        self.retriever = retriever

    # -- session lifecycle ------------------------------------------------

    def create_session(self, profile: Optional[dict] = None) -> SessionState:
        if profile is not None and not isinstance(profile, dict):
            raise ValidationFailedError("profile must be an object")
        state = SessionState(session_id=new_session_id(), profile=profile)
        self.store.create_session(state.to_dict())
        return state

    def load_session(self, session_id: str) -> SessionState:
        return SessionState.from_dict(self.store.load_session(session_id))

    def _save(self, state: SessionState) -> None:
        self.store.save_session(state.to_dict())

    # -- prompt context ---------------------------------------------------

    def _context_documents(self, state: SessionState) -> list[dict]:
        docs = []
        for kind in CONTEXT_ORDER:
            ref = state.ref(kind)
            if ref is not None:
                docs.append(self.store.load_artifact(ref))
        return docs

    def _snippets(self, state: SessionState, query: str) -> list[Snippet]:
        snippets = []
        if state.profile:
            lines = [f"{key}: {state.profile[key]}" for key in sorted(state.profile)]
            snippets.append(Snippet(source_id="user_profile", text="\n".join(lines)))
        if self.retriever is not None and query:
            snippets.extend(self.retriever(query, 3))
        return snippets

    def _note_stage(self, state: SessionState) -> None:
        note = getattr(self.backend, "note_stage", None)
        if note is not None:
            note(state.stage)

    def _exchange(self, state: SessionState, config: AgentConfig, key: str,
                  conversation: list[ConversationTurn], payload_check,
                  allow_questions: bool, query: str = ""):
        self._note_stage(state)
        prior = self._context_documents(state)
        snippets = self._snippets(state, query)

        def render(conv):
            return render_prompt(config, prior, snippets, conv)

        # budget is cumulative per stage key, so repeated turns in one stage
        # cannot exceed the configured maximum between them
        used_before = state.reprompt_counts.get(key, 0)
        budget = max(0, config.max_reprompt - used_before)
        system_before = sum(1 for t in conversation if t.speaker == "system")
        try:
            result = guarded_exchange(
                config, self.backend, conversation, render,
                payload_check=payload_check,
                allow_questions=allow_questions,
                reprompt_budget=budget,
            )
        except GuardrailExhaustedError:
            system_after = sum(1 for t in conversation if t.speaker == "system")
            state.reprompt_counts[key] = used_before + (system_after - system_before)
            raise
        state.reprompt_counts[key] = used_before + result.reprompts_used
        return result

    # -- stage 1 and 2: dialogue loops --------------------------------------

    def submit_user_message(self, state: SessionState, text: str) -> TurnResult:
        if state.stage not in DIALOGUE_STAGES:
            raise StageOrderError(
                f"messages are only accepted in stages {DIALOGUE_STAGES}, "
                f"session is at {state.stage!r}")
        if not text or not text.strip():
            raise ValidationFailedError("message text must be nonempty")
        stage = state.stage
        kind = STAGE_ARTIFACT[stage]
        config = self.configs[DIALOGUE_AGENT[stage]]
        conversation = state.conversation(stage)
        conversation.append(ConversationTurn(speaker="user", text=text))
        self.store.append_log(state.session_id, stage,
                              {"event": "user_message", "text": text})
        try:
            result = self._exchange(
                state, config, stage, conversation,
                payload_check=_artifact_payload_check(kind),
                allow_questions=True, query=text)
        except DdapError:
            self._save(state)
            raise
        envelope = result.envelope
        conversation.append(ConversationTurn(speaker="agent", text=envelope.message))
        if envelope.status == STATUS_QUESTION:
            self.store.append_log(state.session_id, stage,
                                  {"event": "agent_question", "text": envelope.message,
                                   "reprompts_used": result.reprompts_used})
            self._save(state)
            return TurnResult(kind=TURN_AGENT_QUESTION, message=envelope.message)
        ref = self.store.persist_artifact(state.session_id, kind, result.payload)
        state.artifact_refs[kind] = ref
        state.stage = STAGES[STAGES.index(stage) + 1]
        self.store.append_log(state.session_id, stage,
                              {"event": "stage_complete", "ref": ref.to_dict(),
                               "reprompts_used": result.reprompts_used})
        self._save(state)
        return TurnResult(kind=TURN_STAGE_COMPLETE, message=envelope.message,
                          artifact_ref=ref)

    # -- stage 3: two one-shot steps ----------------------------------------

    def generate_preprocessing(self, state: SessionState) -> dict:
        if state.stage != STAGE_PIPELINES:
            raise StageOrderError(
                f"preprocessing generation requires stage {STAGE_PIPELINES!r}, "
                f"session is at {state.stage!r}")
        for kind in (PROBLEM_DEFINITION, COMPUTE_SPEC):
            if state.ref(kind) is None:
                raise StageOrderError(f"preprocessing generation requires {kind}")
        config = self.configs["preprocessing_designer"]
        conversation = [ConversationTurn(
            speaker="user",
            text="Propose the preprocessing plan for the defined problem and "
                 "compute environment.")]
        result = self._exchange(
            state, config, KEY_PREPROCESSING, conversation,
            payload_check=_artifact_payload_check(PREPROCESSING_PLAN),
            allow_questions=False)
        conversation.append(ConversationTurn(speaker="agent",
                                             text=result.envelope.message))
        state.conversation(KEY_PREPROCESSING).extend(conversation)
        ref = self.store.persist_artifact(state.session_id, PREPROCESSING_PLAN,
                                          result.payload)
        state.artifact_refs[PREPROCESSING_PLAN] = ref
        self.store.append_log(state.session_id, STAGE_PIPELINES,
                              {"event": "preprocessing_plan", "ref": ref.to_dict(),
                               "reprompts_used": result.reprompts_used})
        self._save(state)
        return self.store.load_artifact(ref)

    def generate_pipelines(self, state: SessionState) -> dict:
        if state.stage != STAGE_PIPELINES:
            raise StageOrderError(
                f"pipeline generation requires stage {STAGE_PIPELINES!r}, "
                f"session is at {state.stage!r}")
        if state.ref(PREPROCESSING_PLAN) is None:
            raise StageOrderError("pipeline generation requires a preprocessing plan")
        plan = self.store.load_artifact(state.ref(PREPROCESSING_PLAN))

        # the persisted plan is folded in verbatim, whatever the agent echoed
        def normalize(payload: dict) -> dict:
            payload = dict(payload)
            payload["preprocessing"] = plan
            return payload

        config = self.configs["pipeline_designer"]
        conversation = [ConversationTurn(
            speaker="user",
            text=f"Propose exactly {CANDIDATE_COUNT} candidate pipelines for the "
                 "defined problem, compute environment, and preprocessing plan.")]
        result = self._exchange(
            state, config, STAGE_PIPELINES, conversation,
            payload_check=_artifact_payload_check(PIPELINE_SET, normalize),
            allow_questions=False)
        conversation.append(ConversationTurn(speaker="agent",
                                             text=result.envelope.message))
        state.conversation(STAGE_PIPELINES).extend(conversation)
        ref = self.store.persist_artifact(state.session_id, PIPELINE_SET,
                                          result.payload)
        state.artifact_refs[PIPELINE_SET] = ref
        state.stage = STAGE_CODE
        self.store.append_log(state.session_id, STAGE_PIPELINES,
                              {"event": "stage_complete", "ref": ref.to_dict(),
                               "reprompts_used": result.reprompts_used})
        self._save(state)
        return self.store.load_artifact(ref)

    def select_pipeline(self, state: SessionState, index: int) -> SessionState:
        if state.ref(PIPELINE_SET) is None:
            raise StageOrderError("no pipeline set exists yet; nothing to select")
        if not isinstance(index, int) or not 1 <= index <= CANDIDATE_COUNT:
            raise CandidateRangeError(
                f"candidate index must be an integer in 1..{CANDIDATE_COUNT}, "
                f"got {index!r}")
        state.selected_candidate = index
        self.store.append_log(state.session_id, STAGE_CODE,
                              {"event": "pipeline_selected", "index": index})
        self._save(state)
        return state

    # -- stage 4: code generation ------------------------------------------

    def generate_code(self, state: SessionState,
                      candidate_index: Optional[int] = None) -> dict:
        if state.stage != STAGE_CODE:
            raise StageOrderError(
                f"code generation requires stage {STAGE_CODE!r}, "
                f"session is at {state.stage!r}")
        index = candidate_index if candidate_index is not None else state.selected_candidate
        if index is None:
            raise StageOrderError(
                "no candidate resolved: pass candidate_index or select a pipeline first")
        if not isinstance(index, int) or not 1 <= index <= CANDIDATE_COUNT:
            raise CandidateRangeError(
                f"candidate index must be an integer in 1..{CANDIDATE_COUNT}, "
                f"got {index!r}")
        pipeline_set = self.store.load_artifact(state.ref(PIPELINE_SET))
        candidate = next(c for c in pipeline_set["candidates"] if c["index"] == index)
        compute = self.store.load_artifact(state.ref(COMPUTE_SPEC))
        platform = compute.get("preferred_ml_platform", "")

        def normalize(payload: dict) -> dict:
            payload = dict(payload)
            payload["candidate_index"] = index
            payload["repair_count"] = 0
            payload.setdefault("platform", platform)
            return payload

        config = self.configs["code_generator"]
        conversation = [ConversationTurn(
            speaker="user",
            text=f"Generate the complete program for candidate {index} "
                 f"({candidate['name']}).")]
        result = self._exchange(
            state, config, STAGE_CODE, conversation,
            payload_check=_artifact_payload_check(CODE_ARTIFACT, normalize),
            allow_questions=False)
        conversation.append(ConversationTurn(speaker="agent",
                                             text=result.envelope.message))
        state.conversation(STAGE_CODE).extend(conversation)
        ref = self.store.persist_code_artifact(state.session_id, result.payload)
        state.code_refs.append(ref)
        state.artifact_refs[CODE_ARTIFACT] = ref
        self.store.append_log(state.session_id, STAGE_CODE,
                              {"event": "code_generated", "ref": ref.to_dict(),
                               "candidate_index": index,
                               "reprompts_used": result.reprompts_used})
        self._save(state)
        return self.store.load_code_artifact(ref)

    def generate_code_batch(self, state: SessionState) -> list[dict]:
        return [self.generate_code(state, index)
                for index in range(1, CANDIDATE_COUNT + 1)]

    # -- imports, execution records, completion ------------------------------

    def import_artifact(self, state: SessionState, ref: ArtifactRef) -> SessionState:
        expected = IMPORT_STAGE.get(ref.kind)
        if expected is None:
            raise ValidationFailedError(f"cannot import artifact kind {ref.kind!r}")
        if state.stage != expected:
            raise StageOrderError(
                f"importing {ref.kind} requires stage {expected!r}, "
                f"session is at {state.stage!r}")
        new_ref = self.store.copy_artifact(ref, state.session_id)
        if ref.kind == CODE_ARTIFACT:
            state.code_refs.append(new_ref)
        state.artifact_refs[ref.kind] = new_ref
        if ref.kind in IMPORT_ADVANCES:
            state.stage = STAGES[STAGES.index(expected) + 1]
        self.store.append_log(state.session_id, expected,
                              {"event": "artifact_imported", "from": ref.to_dict(),
                               "ref": new_ref.to_dict()})
        self._save(state)
        return state

    def record_execution(self, state: SessionState, code_ref: ArtifactRef,
                         result: ExecutionResult) -> SessionState:
        state.executions.append({"ref": code_ref.path, "result": result.to_dict()})
        if result.ok and state.stage == STAGE_CODE:
            state.stage = STAGE_DONE
        self.store.append_log(state.session_id, STAGE_CODE,
                              {"event": "execution", "ref": code_ref.path,
                               "result": result.to_dict()})
        self._save(state)
        return state

    def finalize(self, state: SessionState) -> SessionState:
        if state.stage != STAGE_CODE:
            raise StageOrderError(
                f"finalize requires stage {STAGE_CODE!r}, session is at {state.stage!r}")
        if not state.code_refs:
            raise StageOrderError("finalize requires at least one code artifact")
        state.stage = STAGE_DONE
        self.store.append_log(state.session_id, STAGE_CODE, {"event": "finalized"})
        self._save(state)
        return state

    def repair_recorded(self, state: SessionState, code_ref: ArtifactRef
                        ) -> tuple[dict, ArtifactRef]:
        """Repair a code artifact using its last recorded failing execution."""
        document = self.store.load_code_artifact(code_ref)
        failure = None
        for record in reversed(state.executions):
            if record["ref"] == code_ref.path:
                failure = ExecutionResult.from_dict(record["result"])
                break
        if failure is None:
            raise StageOrderError(
                f"no execution recorded for {code_ref.path}; run it first")
        if failure.ok:
            raise StageOrderError(
                f"last execution of {code_ref.path} succeeded; nothing to repair")
        self._note_stage(state)
        repaired, new_ref = repair_code(
            document, failure, backend=self.backend,
            max_repairs=self.max_repairs, store=self.store,
            session_id=state.session_id,
            config=self.configs.get("code_repairer", self.configs["code_generator"]))
        state.code_refs.append(new_ref)
        self.store.append_log(state.session_id, STAGE_CODE,
                              {"event": "code_repaired", "from": code_ref.path,
                               "ref": new_ref.to_dict()})
        self._save(state)
        return repaired, new_ref


@dataclass
class ArtifactSet:
    session_id: str
    state: SessionState
    problem_definition: dict
    compute_spec: dict
    preprocessing_plan: dict
    pipeline_set: dict
    code_artifact: dict
    refs: dict

    def documents(self) -> dict:
        return {
            PROBLEM_DEFINITION: self.problem_definition,
            COMPUTE_SPEC: self.compute_spec,
            PREPROCESSING_PLAN: self.preprocessing_plan,
            PIPELINE_SET: self.pipeline_set,
            CODE_ARTIFACT: self.code_artifact,
        }


def run_headless(intent: str, answers: list[str], backend, *,
                 store: ArtifactStore | None = None,
                 profile: Optional[dict] = None,
                 select: int = 1,
                 configs: Optional[dict] = None,
                 max_repairs: int = 1) -> ArtifactSet:
    """Drive a full session without a human: intent in, four artifacts out.

    Equivalent to the interactive loop fed the same texts in the same
    order; aborts with the stage name if the answers run out while an
    agent still has questions.
    """
    store = store or ArtifactStore()
    orch = Orchestrator(store=store, backend=backend, configs=configs,
                        max_repairs=max_repairs)
    state = orch.create_session(profile)
    queue = list(answers)
    turn_index = 1
    orch.submit_user_message(state, intent)
    while state.stage in DIALOGUE_STAGES:
        if not queue:
            raise DdapError(
                f"headless run starved: answers exhausted during {state.stage} "
                f"after turn {turn_index}")
        turn_index += 1
        orch.submit_user_message(state, queue.pop(0))
    orch.generate_preprocessing(state)
    orch.generate_pipelines(state)
    orch.select_pipeline(state, select)
    orch.generate_code(state)
    orch.finalize(state)
    refs = {kind: state.ref(kind) for kind in CONTEXT_ORDER}
    refs[CODE_ARTIFACT] = state.code_refs[-1]
    return ArtifactSet(
        session_id=state.session_id,
        state=state,
        problem_definition=store.load_artifact(refs[PROBLEM_DEFINITION]),
        compute_spec=store.load_artifact(refs[COMPUTE_SPEC]),
        preprocessing_plan=store.load_artifact(refs[PREPROCESSING_PLAN]),
        pipeline_set=store.load_artifact(refs[PIPELINE_SET]),
        code_artifact=store.load_code_artifact(refs[CODE_ARTIFACT]),
        refs=refs,
    )
