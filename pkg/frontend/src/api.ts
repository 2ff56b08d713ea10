import type {
  ArtifactRef,
  CodeDoc,
  ExecutionResult,
  SessionSummary,
  TurnResult,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    public detail: string,
  ) {
    super(`${code}: ${detail}`);
    this.name = "ApiError";
  }
}

async function fail(response: Response): Promise<never> {
  let code = "backend_failure";
  let detail = `unexpected status ${response.status}`;
  try {
    const body = await response.json();
    if (body && typeof body.code === "string") code = body.code;
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the fallback text
  }
  throw new ApiError(response.status, code, detail);
}

/** Thin typed wrapper over the session service. No state of its own. */
export class ApiClient {
  constructor(private baseUrl: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) await fail(response);
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/api/health");
  }

  createSession(profile?: Record<string, unknown>): Promise<{ session_id: string; stage: string }> {
    return this.request("POST", "/api/sessions", profile ? { profile } : {});
  }

  getSession(sessionId: string): Promise<SessionSummary> {
    return this.request("GET", `/api/sessions/${sessionId}`);
  }

  sendMessage(sessionId: string, text: string): Promise<TurnResult> {
    return this.request("POST", `/api/sessions/${sessionId}/messages`, { text });
  }

  listArtifacts(sessionId: string): Promise<{ artifacts: ArtifactRef[] }> {
    return this.request("GET", `/api/sessions/${sessionId}/artifacts`);
  }

  /** Returns the artifact document plus the exact response text for verbatim display. */
  async getArtifactRaw(refPath: string): Promise<{ doc: unknown; raw: string }> {
    const response = await fetch(`${this.baseUrl}/api/artifacts/${refPath}`);
    if (!response.ok) await fail(response);
    const raw = await response.text();
    return { doc: JSON.parse(raw), raw };
  }

  importArtifact(sessionId: string, refPath: string): Promise<SessionSummary> {
    return this.request("POST", `/api/sessions/${sessionId}/import`, { ref: refPath });
  }

  generatePreprocessing(sessionId: string): Promise<{ ref: ArtifactRef; document: unknown; stage: string }> {
    return this.request("POST", `/api/sessions/${sessionId}/preprocessing`);
  }

  generatePipelines(sessionId: string): Promise<{ ref: ArtifactRef; document: unknown; stage: string }> {
    return this.request("POST", `/api/sessions/${sessionId}/pipelines`);
  }

  selectPipeline(sessionId: string, index: number): Promise<SessionSummary> {
    return this.request("POST", `/api/sessions/${sessionId}/pipelines/select`, { index });
  }

  generateCode(sessionId: string, candidateIndex?: number): Promise<{ ref: ArtifactRef; document: CodeDoc; stage: string }> {
    const body = candidateIndex === undefined ? {} : { candidate_index: candidateIndex };
    return this.request("POST", `/api/sessions/${sessionId}/code`, body);
  }

  executeCode(refPath: string): Promise<{ result: ExecutionResult; stage: string }> {
    return this.request("POST", `/api/code/${refPath}/execute`);
  }

  repairCode(refPath: string): Promise<{ ref: ArtifactRef; document: CodeDoc; stage: string }> {
    return this.request("POST", `/api/code/${refPath}/repair`);
  }

  finalize(sessionId: string): Promise<SessionSummary> {
    return this.request("POST", `/api/sessions/${sessionId}/finalize`);
  }
}
