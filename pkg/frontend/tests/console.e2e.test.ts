/** Console round-trip against the real service.
 *
 * Spawns `anorank serve` on a scratch synthetic dataset, drives a full
 * human-labeled session through the console's controller (the exact code
 * path the browser uses), and checks that an autopilot session given the
 * same answers lands on the identical final ranking.
 */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { SessionController } from "../src/controller.js";
import { MemoryStore } from "../src/labelStore.js";
import type { SessionState } from "../src/types.js";

const PORT = 18712 + Math.floor(Math.random() * 800);
const BASE = `http://127.0.0.1:${PORT}`;
const CONFIG = {
  T: 2,
  k_query: 4,
  n0: 4,
  seed: 11,
  metric: "nm1",
  strategy: "hybrid",
  train: { epochs_initial: 3, epochs_retrain: 1 },
};

let server: ChildProcess | null = null;
let workDir = "";
let anomalyIds = new Set<number>();

async function waitForService(timeoutMs = 60_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    try {
      const res = await fetch(`${BASE}/healthz`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) throw new Error("service did not come up");
    await new Promise((r) => setTimeout(r, 250));
  }
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "anorank-console-"));
  const gen = spawnSync(
    "python3",
    ["-m", "anorank.cli", "gen-synth", "--rows", "120", "--cols", "24",
     "--anomaly-frac", "0.05", "--signature-size", "8", "--seed", "5",
     "-o", workDir],
    { encoding: "utf-8" },
  );
  expect(gen.status, gen.stderr).toBe(0);
  anomalyIds = new Set(
    readFileSync(join(workDir, "labels.txt"), "utf-8")
      .split("\n")
      .filter((line) => line.trim())
      .map(Number),
  );

  server = spawn(
    "python3",
    ["-m", "anorank.cli", "serve", "--data", join(workDir, "data.csv"),
     "--labels", join(workDir, "labels.txt"), "--port", String(PORT)],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  await waitForService();
});

afterAll(() => {
  server?.kill("SIGTERM");
  rmSync(workDir, { recursive: true, force: true });
});

function labelBatch(ctl: SessionController): void {
  for (const id of ctl.pendingIds()) {
    ctl.setLabel(id, anomalyIds.has(id) ? "anomaly" : "normal");
  }
}

async function runHumanSession(): Promise<SessionState> {
  const ctl = new SessionController(new ApiClient(BASE), new MemoryStore(), 50);
  await ctl.start(CONFIG);
  for (;;) {
    const state = await ctl.pollUntil(["awaiting_labels", "finished"]);
    if (state.phase === "finished") return state;
    labelBatch(ctl);
    expect(ctl.canSubmit()).toBe(true);
    expect(await ctl.submit()).toBe(true);
  }
}

describe("console round-trip", () => {
  it("labels a full iteration: counter advances, counts update", async () => {
    const ctl = new SessionController(new ApiClient(BASE), new MemoryStore(), 50);
    await ctl.start(CONFIG);

    // seed batch: iteration counter 0, n0 cards, no scores yet
    expect(ctl.state?.phase).toBe("awaiting_labels");
    expect(ctl.state?.iteration).toBe(0);
    expect(ctl.pendingIds().length).toBe(CONFIG.n0);
    expect(ctl.canSubmit()).toBe(false); // nothing labeled yet
    labelBatch(ctl);
    expect(await ctl.submit()).toBe(true);

    let state = await ctl.pollUntil(["awaiting_labels"]);
    expect(state.label_counts.normal + state.label_counts.anomaly).toBe(CONFIG.n0);

    // first ranked batch: cards carry scores; labeling it advances the counter
    expect(ctl.pendingIds().length).toBe(CONFIG.k_query);
    for (const card of ctl.queries) {
      expect(card.reconstruction_error).not.toBeNull();
    }
    labelBatch(ctl);
    expect(await ctl.submit()).toBe(true);
    state = await ctl.pollUntil(["awaiting_labels", "finished"]);
    expect(state.iteration).toBe(1);
    expect(state.label_counts.normal + state.label_counts.anomaly).toBe(
      CONFIG.n0 + CONFIG.k_query,
    );
  });

  it("human and autopilot sessions produce identical final rankings", async () => {
    const human = await runHumanSession();
    expect(human.iteration).toBe(CONFIG.T);
    expect(human.history.length).toBe(CONFIG.T);

    const api = new ApiClient(BASE);
    const auto = await api.startSession(CONFIG, true);
    expect(auto.phase).toBe("finished");
    const autoState = await api.getState(auto.session_id);

    expect(human.top_ranking).toEqual(autoState.top_ranking);
    expect(human.history).toEqual(autoState.history);
    expect(human.final_ndcg).toBe(autoState.final_ndcg);
  });
});
