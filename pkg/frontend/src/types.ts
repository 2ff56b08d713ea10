export interface ArtifactRef {
  session_id: string;
  kind: string;
  path: string;
  sha256: string;
}

export interface Turn {
  speaker: string;
  text: string;
  timestamp: number;
}

export interface SessionSummary {
  session_id: string;
  stage: string;
  selected_candidate: number | null;
  last_message: Turn | null;
  artifact_refs: Record<string, ArtifactRef>;
  code_refs: ArtifactRef[];
  reprompt_counts: Record<string, number>;
  executions: unknown[];
}

export interface TurnResult {
  kind: string;
  message: string;
  artifact_ref: ArtifactRef | null;
  stage: string;
}

export interface Candidate {
  index: number;
  name: string;
  description: string;
  pros: string[];
  cons: string[];
  preprocessing_refs?: string[];
}

export interface PipelineSetDoc {
  artifact_kind: string;
  candidates: Candidate[];
  [key: string]: unknown;
}

export interface CodeFile {
  relative_path: string;
  content: string;
}

export interface CodeDoc {
  artifact_kind: string;
  entrypoint: string;
  files: CodeFile[];
  candidate_index: number;
  repair_count: number;
  [key: string]: unknown;
}

export interface ExecutionResult {
  exit_status: number;
  stdout_excerpt: string;
  stderr_excerpt: string;
  duration_ms: number;
  timed_out: boolean;
}

export interface ArtifactView {
  ref: ArtifactRef;
  /** exact response body of GET /api/artifacts/{path}, displayed verbatim */
  raw: string;
  doc: unknown;
}

export const STAGES = [
  "problem_definition",
  "compute_spec",
  "pipeline_generation",
  "code_generation",
] as const;

export const STAGE_DONE = "done";
