import { ApiClient, ApiError } from "./api.js";
import {
  STAGES,
  STAGE_DONE,
  type ArtifactRef,
  type ArtifactView,
  type Candidate,
  type CodeDoc,
  type ExecutionResult,
  type PipelineSetDoc,
  type SessionSummary,
} from "./types.js";

export interface AppOptions {
  /** refresh cadence; 0 disables the poll timer (tests drive refreshes) */
  pollIntervalMs?: number;
}

const DIALOGUE_STAGES: readonly string[] = ["problem_definition", "compute_spec"];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  for (const child of children) {
    node.append(typeof child === "string" ? document.createTextNode(child) : child);
  }
  return node;
}

/** Collapsible structured view of a JSON document. */
function renderTree(value: unknown): HTMLElement {
  if (Array.isArray(value)) {
    const list = el("ul", { class: "tree-list" });
    value.forEach((item, i) => {
      list.append(el("li", {}, el("span", { class: "tree-key" }, `${i}: `), renderTree(item)));
    });
    return list;
  }
  if (value !== null && typeof value === "object") {
    const list = el("ul", { class: "tree-list" });
    for (const [key, item] of Object.entries(value as Record<string, unknown>)) {
      list.append(el("li", {}, el("span", { class: "tree-key" }, `${key}: `), renderTree(item)));
    }
    return list;
  }
  return el("span", { class: "tree-leaf" }, JSON.stringify(value));
}

export class App {
  sessionId: string | null = null;
  session: SessionSummary | null = null;
  timeline: { speaker: string; text: string }[] = [];
  artifacts: ArtifactView[] = [];
  candidates: Candidate[] | null = null;
  codeRef: ArtifactRef | null = null;
  codeDoc: CodeDoc | null = null;
  lastExecution: ExecutionResult | null = null;
  lastError: string | null = null;
  sandboxFault: string | null = null;
  busy = false;

  private draft = "";
  private chain: Promise<void> = Promise.resolve();
  private timer: ReturnType<typeof setInterval> | null = null;
  private pollIntervalMs: number;

  constructor(
    private root: HTMLElement,
    private client: ApiClient,
    options: AppOptions = {},
  ) {
    this.pollIntervalMs = options.pollIntervalMs ?? 1000;
  }

  /** Create (or re-attach) the session and start polling. */
  async start(profile?: Record<string, unknown>, sessionId?: string): Promise<void> {
    await this.act(async () => {
      if (sessionId) {
        this.sessionId = sessionId;
      } else if (!this.sessionId) {
        const created = await this.client.createSession(profile);
        this.sessionId = created.session_id;
      }
    });
    if (this.pollIntervalMs > 0 && this.timer === null) {
      this.timer = setInterval(() => void this.act(async () => {}), this.pollIntervalMs);
    }
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }

  /** Resolves once every queued action (clicks included) has settled. */
  idle(): Promise<void> {
    return this.chain;
  }

  // every user-triggered mutation funnels through here so errors become
  // banners and the view always re-syncs with the API afterwards
  private act(fn: () => Promise<void>): Promise<void> {
    const run = async () => {
      this.busy = true;
      this.lastError = null;
      this.sandboxFault = null;
      try {
        await fn();
      } catch (err) {
        if (err instanceof ApiError && err.code === "sandbox_error") {
          this.sandboxFault = err.detail;
        } else if (err instanceof ApiError) {
          this.lastError = `${err.code}: ${err.detail}`;
        } else {
          this.lastError = String(err);
        }
      } finally {
        this.busy = false;
        try {
          await this.refresh();
        } catch (err) {
          this.lastError = this.lastError ?? String(err);
        }
        this.render();
      }
    };
    this.chain = this.chain.then(run);
    return this.chain;
  }

  /** Re-derive the whole view from GET endpoints. */
  async refresh(): Promise<void> {
    if (!this.sessionId) return;
    const summary = await this.client.getSession(this.sessionId);
    this.session = summary;

    const listing = await this.client.listArtifacts(this.sessionId);
    this.artifacts = await Promise.all(
      listing.artifacts.map(async (ref) => {
        const { doc, raw } = await this.client.getArtifactRaw(ref.path);
        return { ref, doc, raw };
      }),
    );

    const pipeRef = summary.artifact_refs["pipeline_set"];
    if (pipeRef) {
      const view = this.artifacts.find((a) => a.ref.path === pipeRef.path);
      this.candidates = view ? (view.doc as PipelineSetDoc).candidates : null;
    } else {
      this.candidates = null;
    }

    const latest = summary.code_refs[summary.code_refs.length - 1] ?? null;
    if (latest && this.codeRef?.path !== latest.path) {
      const view = this.artifacts.find((a) => a.ref.path === latest.path);
      this.codeRef = latest;
      this.codeDoc = view ? (view.doc as CodeDoc) : null;
    } else if (!latest) {
      this.codeRef = null;
      this.codeDoc = null;
    }

    if (this.timeline.length === 0 && summary.last_message) {
      const speaker = summary.last_message.speaker === "user" ? "user" : "agent";
      this.timeline.push({ speaker, text: summary.last_message.text });
    }
  }

  // -- user actions ------------------------------------------------------

  send(): Promise<void> {
    const text = this.draft.trim();
    if (!text || !this.sessionId) return this.idle();
    return this.act(async () => {
      const result = await this.client.sendMessage(this.sessionId!, text);
      this.timeline.push({ speaker: "user", text });
      this.timeline.push({ speaker: "agent", text: result.message });
      this.draft = "";
    });
  }

  generatePlan(): Promise<void> {
    return this.act(async () => {
      await this.client.generatePreprocessing(this.sessionId!);
    });
  }

  generatePipelines(): Promise<void> {
    return this.act(async () => {
      await this.client.generatePipelines(this.sessionId!);
    });
  }

  selectCandidate(index: number): Promise<void> {
    return this.act(async () => {
      await this.client.selectPipeline(this.sessionId!, index);
    });
  }

  generateCode(): Promise<void> {
    return this.act(async () => {
      await this.client.generateCode(this.sessionId!);
      this.lastExecution = null;
    });
  }

  runCode(): Promise<void> {
    return this.act(async () => {
      const response = await this.client.executeCode(this.codeRef!.path);
      this.lastExecution = response.result;
    });
  }

  repairCode(): Promise<void> {
    return this.act(async () => {
      await this.client.repairCode(this.codeRef!.path);
      this.lastExecution = null;
    });
  }

  finalize(): Promise<void> {
    return this.act(async () => {
      await this.client.finalize(this.sessionId!);
    });
  }

  // -- rendering -----------------------------------------------------------

  render(): void {
    const stage = this.session?.stage ?? STAGES[0];
    this.root.replaceChildren(
      this.renderHeader(stage),
      this.renderStageIndicator(stage),
      this.renderBanners(),
      this.renderTimeline(),
      this.renderComposer(stage),
      this.renderActions(stage),
      this.renderCandidates(stage),
      this.renderCodePanel(stage),
      this.renderArtifactPanel(),
    );
  }

  private renderHeader(stage: string): HTMLElement {
    const title = this.sessionId ? `session ${this.sessionId}` : "no session";
    const header = el("header", { id: "session-header" }, el("h1", {}, title));
    if (stage === STAGE_DONE) {
      header.append(el("p", { id: "session-done" }, "session done"));
    }
    return header;
  }

  private renderStageIndicator(stage: string): HTMLElement {
    const doneAll = stage === STAGE_DONE;
    const activeIdx = doneAll ? STAGES.length : STAGES.indexOf(stage as (typeof STAGES)[number]);
    const list = el("ol", { id: "stage-indicator" });
    STAGES.forEach((name, i) => {
      const cls = i < activeIdx ? "step done" : i === activeIdx ? "step active" : "step pending";
      list.append(el("li", { class: cls, "data-stage": name }, `${i + 1}. ${name}`));
    });
    return list;
  }

  private renderBanners(): HTMLElement {
    const wrap = el("div", { id: "banners" });
    if (this.lastError) {
      wrap.append(el("div", { id: "error-banner", class: "banner error", role: "alert" }, this.lastError));
    }
    if (this.sandboxFault) {
      wrap.append(
        el("div", { id: "sandbox-banner", class: "banner sandbox", role: "alert" },
          `sandbox error: ${this.sandboxFault}`),
      );
    }
    return wrap;
  }

  private renderTimeline(): HTMLElement {
    const wrap = el("div", { id: "timeline" });
    for (const turn of this.timeline) {
      wrap.append(el("p", { class: `msg ${turn.speaker}` }, turn.text));
    }
    return wrap;
  }

  private renderComposer(stage: string): HTMLElement {
    const input = el("input", {
      id: "composer-input",
      type: "text",
      placeholder: "answer the agent",
    });
    input.value = this.draft;
    const send = el("button", { id: "composer-send" }, "Send");
    const enabled = () =>
      !this.busy && DIALOGUE_STAGES.includes(stage) && this.draft.trim().length > 0;
    send.disabled = !enabled();
    input.disabled = this.busy || !DIALOGUE_STAGES.includes(stage);
    input.addEventListener("input", () => {
      this.draft = input.value;
      send.disabled = !enabled();
    });
    input.addEventListener("keydown", (event) => {
      if ((event as KeyboardEvent).key === "Enter" && enabled()) void this.send();
    });
    send.addEventListener("click", () => void this.send());
    return el("div", { id: "composer" }, input, send);
  }

  private renderActions(stage: string): HTMLElement {
    const wrap = el("div", { id: "actions" });
    const refs = this.session?.artifact_refs ?? {};
    if (stage === "pipeline_generation" && !refs["preprocessing_plan"]) {
      const btn = el("button", { id: "btn-plan" }, "Generate preprocessing plan");
      btn.disabled = this.busy;
      btn.addEventListener("click", () => void this.generatePlan());
      wrap.append(btn);
    }
    if (stage === "pipeline_generation" && refs["preprocessing_plan"] && !refs["pipeline_set"]) {
      const btn = el("button", { id: "btn-pipelines" }, "Generate pipeline candidates");
      btn.disabled = this.busy;
      btn.addEventListener("click", () => void this.generatePipelines());
      wrap.append(btn);
    }
    if (
      stage === "code_generation" &&
      this.session?.selected_candidate != null &&
      !this.codeRef
    ) {
      const btn = el("button", { id: "btn-code" }, "Generate code");
      btn.disabled = this.busy;
      btn.addEventListener("click", () => void this.generateCode());
      wrap.append(btn);
    }
    if (stage === "code_generation" && this.codeRef) {
      const btn = el("button", { id: "btn-finalize" }, "Finalize session");
      btn.disabled = this.busy;
      btn.addEventListener("click", () => void this.finalize());
      wrap.append(btn);
    }
    return wrap;
  }

  private renderCandidates(stage: string): HTMLElement {
    const wrap = el("section", { id: "candidates" });
    if (!this.candidates) return wrap;
    const selected = this.session?.selected_candidate ?? null;
    for (const candidate of this.candidates) {
      const card = el(
        "article",
        {
          class: `candidate-card${selected === candidate.index ? " selected" : ""}`,
          "data-index": String(candidate.index),
        },
        el("h3", {}, `${candidate.index}. ${candidate.name}`),
        el("p", { class: "description" }, candidate.description),
        el("h4", {}, "pros"),
        el("ul", { class: "pros" }, ...candidate.pros.map((p) => el("li", {}, p))),
        el("h4", {}, "cons"),
        el("ul", { class: "cons" }, ...candidate.cons.map((c) => el("li", {}, c))),
      );
      const btn = el("button", { class: "select" }, selected === candidate.index ? "Selected" : "Select");
      btn.disabled = this.busy || stage !== "code_generation";
      btn.addEventListener("click", () => void this.selectCandidate(candidate.index));
      card.append(btn);
      wrap.append(card);
    }
    return wrap;
  }

  private renderCodePanel(stage: string): HTMLElement {
    const wrap = el("section", { id: "code-panel" });
    if (!this.codeDoc || !this.codeRef) return wrap;
    wrap.append(el("h2", {}, `code ${this.codeRef.path}`));
    const files = el("div", { id: "code-files" });
    for (const file of this.codeDoc.files) {
      files.append(
        el("details", { class: "code-file", "data-path": file.relative_path },
          el("summary", {}, file.relative_path),
          el("pre", {}, file.content)),
      );
    }
    wrap.append(files);

    if (stage === "code_generation") {
      const run = el("button", { id: "btn-run" }, "Run");
      run.disabled = this.busy;
      run.addEventListener("click", () => void this.runCode());
      wrap.append(run);
    }

    if (this.lastExecution) {
      const result = this.lastExecution;
      const ok = result.exit_status === 0 && !result.timed_out;
      const output = el(
        "div",
        { id: "exec-output", class: ok ? "success" : "failure" },
        el("p", { class: "exec-status" },
          `exit ${result.exit_status} in ${result.duration_ms} ms` +
            (result.timed_out ? " (timed out)" : "")),
      );
      if (result.stdout_excerpt) {
        output.append(el("pre", { class: "stdout" }, result.stdout_excerpt));
      }
      if (result.stderr_excerpt) {
        output.append(el("pre", { class: "stderr" }, result.stderr_excerpt));
      }
      wrap.append(output);

      if (!ok && stage === "code_generation") {
        const repair = el("button", { id: "btn-repair" }, "Repair");
        const spent = (this.codeDoc.repair_count ?? 0) >= 1;
        repair.disabled = this.busy || spent;
        repair.addEventListener("click", () => void this.repairCode());
        wrap.append(repair);
        if (spent) {
          wrap.append(el("p", { id: "repair-note" }, "repair budget spent: one repair per artifact"));
        }
      }
    }
    return wrap;
  }

  private renderArtifactPanel(): HTMLElement {
    const wrap = el("section", { id: "artifact-panel" });
    for (const view of this.artifacts) {
      wrap.append(
        el("details", { class: "artifact", "data-kind": view.ref.kind, "data-path": view.ref.path },
          el("summary", {}, `${view.ref.kind} (${view.ref.path})`),
          el("div", { class: "tree" }, renderTree(view.doc)),
          el("details", { class: "raw-wrap" },
            el("summary", {}, "raw document"),
            el("pre", { class: "artifact-raw", "data-path": view.ref.path }, view.raw))),
      );
    }
    return wrap;
  }
}
