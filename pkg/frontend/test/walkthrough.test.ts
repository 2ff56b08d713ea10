import { afterAll, beforeAll, expect, test } from "vitest";
import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";

import { ApiClient } from "../src/api.js";
import { App } from "../src/app.js";

const PORT = 18000 + (process.pid % 1000);
const BASE = `http://127.0.0.1:${PORT}`;
// vitest runs with the package root as cwd; the fixture lives in the
// backend's test corpus one level up
const FIXTURE = resolve(process.cwd(), "../tests/fixtures/ui_transcript.json");

let service: ChildProcess;
let dataDir: string;
let serviceLog = "";

async function waitForHealth(): Promise<void> {
  for (let i = 0; i < 150; i++) {
    if (service.exitCode !== null) break;
    try {
      const response = await fetch(`${BASE}/api/health`);
      if (response.ok) return;
    } catch {
      // not listening yet
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error(`service did not come up on ${BASE}\n${serviceLog}`);
}

beforeAll(async () => {
  // make the API same-origin for the simulated page
  (window as unknown as { happyDOM: { setURL(url: string): void } }).happyDOM.setURL(BASE);
  dataDir = mkdtempSync(join(tmpdir(), "ddap-ui-"));
  service = spawn(
    "python3",
    ["-m", "ddap.cli", "--data-dir", dataDir, "serve", "--port", String(PORT)],
    {
      env: {
        ...process.env,
        DDAP_LLM_BACKEND: "scripted",
        DDAP_SCRIPT_PATH: FIXTURE,
      },
      stdio: ["ignore", "pipe", "pipe"],
    },
  );
  service.stdout?.on("data", (chunk) => (serviceLog += chunk));
  service.stderr?.on("data", (chunk) => (serviceLog += chunk));
  await waitForHealth();
});

afterAll(() => {
  service?.kill();
  if (dataDir) rmSync(dataDir, { recursive: true, force: true });
});

function mount(): HTMLElement {
  document.body.innerHTML = '<div id="app"></div>';
  return document.querySelector<HTMLElement>("#app")!;
}

function activeStage(root: HTMLElement): string | null {
  return root.querySelector(".step.active")?.getAttribute("data-stage") ?? null;
}

test("full session walkthrough against the live service", async () => {
  const root = mount();
  const app = new App(root, new ApiClient(BASE), { pollIntervalMs: 0 });
  await app.start();

  const stagesSeen = new Set<string>();
  const note = () => {
    const stage = activeStage(root);
    if (stage) stagesSeen.add(stage);
  };
  note();
  expect(activeStage(root)).toBe("problem_definition");

  // empty input keeps the send control disabled
  let send = root.querySelector<HTMLButtonElement>("#composer-send")!;
  expect(send.disabled).toBe(true);

  // candidates are not offered before the pipeline set exists
  expect(root.querySelectorAll(".candidate-card").length).toBe(0);

  const say = async (text: string) => {
    const input = root.querySelector<HTMLInputElement>("#composer-input")!;
    input.value = text;
    input.dispatchEvent(new Event("input"));
    send = root.querySelector<HTMLButtonElement>("#composer-send")!;
    expect(send.disabled).toBe(false);
    send.click();
    await app.idle();
    note();
  };

  await say("I need an image classifier for my bird photos.");
  await say("Nine species, all local songbirds.");
  await say("They come from camera traps as 24 MP JPEGs.");
  await say("Train on the lab workstation; photos must stay on site.");
  note();
  expect(activeStage(root)).toBe("compute_spec");

  await say("One RTX 4090 with 24 GB of memory.");
  expect(root.textContent).toContain("accelerator");
  await say("About 2 TB free, no cloud budget.");
  await say("PyTorch would be ideal.");
  expect(activeStage(root)).toBe("pipeline_generation");

  // dialogue input is gated off outside the two dialogue stages
  const input = root.querySelector<HTMLInputElement>("#composer-input")!;
  expect(input.disabled).toBe(true);

  root.querySelector<HTMLButtonElement>("#btn-plan")!.click();
  await app.idle();
  expect(root.querySelector('details.artifact[data-kind="preprocessing_plan"]')).not.toBeNull();
  expect(activeStage(root)).toBe("pipeline_generation");

  root.querySelector<HTMLButtonElement>("#btn-pipelines")!.click();
  await app.idle();
  note();
  expect(activeStage(root)).toBe("code_generation");

  const cards = root.querySelectorAll<HTMLElement>(".candidate-card");
  expect(cards.length).toBe(5);
  for (const card of cards) {
    expect(card.querySelectorAll("ul.pros li").length).toBeGreaterThan(0);
    expect(card.querySelectorAll("ul.cons li").length).toBeGreaterThan(0);
  }

  // choose candidate 2; exactly one card may be highlighted
  cards[1].querySelector<HTMLButtonElement>("button.select")!.click();
  await app.idle();
  const selected = root.querySelectorAll(".candidate-card.selected");
  expect(selected.length).toBe(1);
  expect(selected[0].getAttribute("data-index")).toBe("2");

  root.querySelector<HTMLButtonElement>("#btn-code")!.click();
  await app.idle();
  expect(root.querySelector("#code-panel")!.textContent).toContain("a4_code_2");
  expect(root.querySelector('details.code-file[data-path="train.py"]')).not.toBeNull();

  // first execution fails and offers exactly one repair
  root.querySelector<HTMLButtonElement>("#btn-run")!.click();
  await app.idle();
  let output = root.querySelector<HTMLElement>("#exec-output")!;
  expect(output.classList.contains("failure")).toBe(true);
  expect(output.querySelector("pre.stderr")!.textContent).toContain("NameError");
  expect(activeStage(root)).toBe("code_generation");

  root.querySelector<HTMLButtonElement>("#btn-repair")!.click();
  await app.idle();
  expect(root.querySelector("#code-panel")!.textContent).toContain("a4_code_2_r1");
  expect(root.querySelector("#exec-output")).toBeNull();

  root.querySelector<HTMLButtonElement>("#btn-run")!.click();
  await app.idle();
  output = root.querySelector<HTMLElement>("#exec-output")!;
  expect(output.classList.contains("success")).toBe(true);
  expect(output.querySelector("pre.stdout")!.textContent).toContain("loss");

  // the session is done and the indicator passed through all four steps
  expect(root.querySelector("#session-done")).not.toBeNull();
  expect(root.querySelectorAll(".step.done").length).toBe(4);
  expect([...stagesSeen].sort()).toEqual([
    "code_generation",
    "compute_spec",
    "pipeline_generation",
    "problem_definition",
  ]);

  // every displayed artifact is byte-equal to its GET /api/artifacts response
  const sessionId = app.sessionId!;
  const listing = await (await fetch(`${BASE}/api/sessions/${sessionId}/artifacts`)).json();
  expect(listing.artifacts.length).toBeGreaterThanOrEqual(6);
  for (const ref of listing.artifacts) {
    const pre = root.querySelector<HTMLElement>(`pre.artifact-raw[data-path="${ref.path}"]`);
    expect(pre, `artifact ${ref.path} is displayed`).not.toBeNull();
    const body = await (await fetch(`${BASE}/api/artifacts/${ref.path}`)).text();
    expect(pre!.textContent).toBe(body);
  }
});

test("api errors surface as a banner, not silence", async () => {
  const root = mount();
  const app = new App(root, new ApiClient(BASE), { pollIntervalMs: 0 });
  await app.start(undefined, "zzzzzzzzzzzz");

  const banner = root.querySelector<HTMLElement>("#error-banner");
  expect(banner).not.toBeNull();
  expect(banner!.textContent).toContain("not_found");
});

test("reload rebuilds the same view from GET endpoints alone", async () => {
  const root = mount();
  const app = new App(root, new ApiClient(BASE), { pollIntervalMs: 0 });
  await app.start();
  const sessionId = app.sessionId!;
  await app.idle();

  const fresh = mount();
  const reloaded = new App(fresh, new ApiClient(BASE), { pollIntervalMs: 0 });
  await reloaded.start(undefined, sessionId);
  expect(activeStage(fresh)).toBe("problem_definition");
  expect(fresh.querySelector("#session-header")!.textContent).toContain(sessionId);
});
