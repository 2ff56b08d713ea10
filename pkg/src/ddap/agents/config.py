"""Role configurations for the four workflow agents.

Each config carries the system-message text, an ordered guardrail checklist
rendered into every prompt, a sampling temperature, and the corrective
re-prompt budget. Dialogue agents run warmer than the structured-output
agents.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

AGENT_IDS = ("problem_definer", "compute_specifier", "pipeline_designer", "code_generator")

DEFAULT_MAX_REPROMPT = 2

ENVELOPE_INSTRUCTIONS = (
    "Reply with exactly one JSON object and nothing else: "
    '{"status": "question" | "final", "message": <string>, "payload": <object>}. '
    'Use status "question" with a single focused question in "message" when you '
    'still need information. Use status "final" with the completed document in '
    '"payload" when every checklist item is covered. Never wrap the object in '
    "markdown fences or add prose around it."
)


@dataclass(frozen=True)
class AgentConfig:
    agent_id: str
    role_text: str
    guardrail_checklist: tuple[str, ...] = ()
    temperature: float = 0.7
    max_reprompt: int = DEFAULT_MAX_REPROMPT

    def __post_init__(self):
        if self.agent_id not in AGENT_IDS:
            raise ValueError(f"agent_id must be one of {AGENT_IDS}, got {self.agent_id!r}")
        if not self.role_text.strip():
            raise ValueError("role_text must be nonempty")
        if not 0 <= self.temperature <= 2:
            raise ValueError("temperature must be in [0, 2]")
        if self.max_reprompt < 0:
            raise ValueError("max_reprompt must be nonnegative")

    def with_max_reprompt(self, max_reprompt: int) -> "AgentConfig":
        return replace(self, max_reprompt=max_reprompt)


PROBLEM_DEFINER = AgentConfig(
    agent_id="problem_definer",
    role_text=(
        "You are a research planning assistant. A scientist will describe a goal in "
        "their own words; your job is to turn it into a precise, structured problem "
        "definition for a machine learning project. Adapt your language to the "
        "scientist's domain and stated expertise. Ask one clarifying question at a "
        "time while anything on the checklist below is still unknown. Once the "
        "checklist is covered, emit the final problem definition document with "
        "fields: domain, user_expertise, task_type, objective, data_description "
        "{modality, record_count, feature_summary, target_description}, constraints, "
        "success_metrics.\n\n" + ENVELOPE_INSTRUCTIONS
    ),
    guardrail_checklist=(
        "the task objective, in the scientist's own terms",
        "the task type: classification, regression, clustering, or other",
        "the data: modality, approximate record count, features, and target",
        "constraints that bound the solution",
        "the success metrics the scientist cares about",
    ),
    temperature=0.7,
)

COMPUTE_SPECIFIER = AgentConfig(
    agent_id="compute_specifier",
    role_text=(
        "You are an infrastructure planning assistant. Using the problem definition "
        "provided as context, elicit the compute environment available for this "
        "project. Ask one clarifying question at a time until the checklist below is "
        "covered, then emit the final compute specification document with fields: "
        "location, accelerators [{kind, count, memory_gb}], storage_gb, budget "
        "{amount, currency} (or \"unconstrained\"), preferred_ml_platform.\n\n"
        + ENVELOPE_INSTRUCTIONS
    ),
    guardrail_checklist=(
        "where the work runs: on_premises, cloud, or hybrid",
        "accelerators: gpu, tpu, or cpu_only, with count and memory",
        "available storage in GB",
        "the budget, or that it is unconstrained",
        "the preferred machine learning platform",
    ),
    temperature=0.7,
)

PREPROCESSING_DESIGNER = AgentConfig(
    agent_id="pipeline_designer",
    role_text=(
        "You are a data preparation specialist. This is a one-shot task: using the "
        "problem definition and compute specification provided as context, design an "
        "ordered data preprocessing plan for the project. Emit a final envelope whose "
        "payload is {\"steps\": [{\"name\", \"description\", \"rationale\"}, ...]}. "
        "Step names must be unique. Do not ask questions.\n\n" + ENVELOPE_INSTRUCTIONS
    ),
    guardrail_checklist=(
        "an ordered list of at least one step",
        "a unique name, a description, and a rationale for every step",
        "coverage of cleaning, transformation, and feature preparation as the data requires",
    ),
    temperature=0.4,
)

PIPELINE_DESIGNER = AgentConfig(
    agent_id="pipeline_designer",
    role_text=(
        "You are an AI pipeline specialist. This is a one-shot task: using the "
        "problem definition, compute specification, and preprocessing plan provided "
        "as context, design exactly five alternative pipeline candidates. Emit a "
        "final envelope whose payload is {\"preprocessing\": <the plan>, "
        "\"candidates\": [{\"index\", \"name\", \"description\", "
        "\"preprocessing_refs\", \"model_family\", \"training_procedure\", "
        "\"evaluation_metrics\", \"pros\", \"cons\"}, ...]}. Indices run 1 through 5. "
        "Do not ask questions.\n\n" + ENVELOPE_INSTRUCTIONS
    ),
    guardrail_checklist=(
        "exactly five candidates, indexed 1 through 5",
        "nonempty pros and cons for every candidate",
        "preprocessing_refs drawn from the plan's step names",
        "a model family and training procedure for every candidate",
        "evaluation metrics matching the problem definition",
    ),
    temperature=0.4,
)

CODE_GENERATOR = AgentConfig(
    agent_id="code_generator",
    role_text=(
        "You are a code generation expert. This is a one-shot task: implement the "
        "selected pipeline candidate as complete, runnable code for the platform "
        "named in the compute specification. Emit a final envelope whose payload is "
        "{\"files\": [{\"relative_path\", \"content\"}, ...], \"entrypoint\": "
        "<relative path>}. The entrypoint must be one of the files. Do not ask "
        "questions.\n\n" + ENVELOPE_INSTRUCTIONS
    ),
    guardrail_checklist=(
        "complete file contents, no placeholders or elisions",
        "an entrypoint script that runs end to end",
        "alignment with the selected candidate and the preferred platform",
        "respect for the stated compute and storage constraints",
    ),
    temperature=0.2,
)

CODE_REPAIRER = AgentConfig(
    agent_id="code_generator",
    role_text=(
        "You are a code repair expert. This is a one-shot task: the generated code "
        "below failed when executed, and its error output follows the code. Diagnose "
        "the failure and emit a final envelope whose payload is the complete "
        "corrected file set: {\"files\": [{\"relative_path\", \"content\"}, ...], "
        "\"entrypoint\": <relative path>}. Return every file, not just the ones you "
        "changed. Do not ask questions.\n\n" + ENVELOPE_INSTRUCTIONS
    ),
    guardrail_checklist=(
        "a diagnosis grounded in the error output",
        "the complete corrected file set, with an entrypoint",
        "no unrelated redesign of the pipeline",
    ),
    temperature=0.2,
)


def default_agent_configs() -> dict[str, AgentConfig]:
    """The stock config per orchestration role, keyed by role name."""
    return {
        "problem_definer": PROBLEM_DEFINER,
        "compute_specifier": COMPUTE_SPECIFIER,
        "preprocessing_designer": PREPROCESSING_DESIGNER,
        "pipeline_designer": PIPELINE_DESIGNER,
        "code_generator": CODE_GENERATOR,
        "code_repairer": CODE_REPAIRER,
    }
