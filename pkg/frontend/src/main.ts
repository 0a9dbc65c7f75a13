/** Browser bootstrap: wires the controller to the DOM and the poll timer. */

import { ApiClient } from "./api.js";
import { SessionController } from "./controller.js";
import { renderView } from "./render.js";
import type { Label } from "./types.js";

const $ = <T extends HTMLElement>(selector: string): T => {
  const el = document.querySelector<T>(selector);
  if (!el) throw new Error(`missing element ${selector}`);
  return el;
};

function currentBaseUrl(): string {
  return ($("#base-url") as HTMLInputElement).value.replace(/\/$/, "");
}

let ctl: SessionController | null = null;
let pollTimer: number | undefined;

function rerender(): void {
  if (!ctl) return;
  $("#view").innerHTML = renderView(ctl);
}

function schedulePolling(): void {
  window.clearInterval(pollTimer);
  pollTimer = window.setInterval(async () => {
    if (!ctl || !ctl.state) return;
    const phase = ctl.state.phase;
    if (phase === "training" || phase === "ranking") {
      await ctl.refresh().catch(() => undefined);
      rerender();
    }
  }, 1000);
}

async function startSession(autopilot: boolean): Promise<void> {
  const configText = ($("#config") as HTMLTextAreaElement).value.trim() || "{}";
  let config: Record<string, unknown>;
  try {
    config = JSON.parse(configText) as Record<string, unknown>;
  } catch {
    $("#view").innerHTML = `<p class="error">config is not valid JSON</p>`;
    return;
  }
  ctl = new SessionController(new ApiClient(currentBaseUrl()), window.localStorage);
  try {
    await ctl.start(config, autopilot);
  } catch (err) {
    $("#view").innerHTML = `<p class="error">${(err as Error).message}</p>`;
    return;
  }
  ($("#session-id") as HTMLInputElement).value = ctl.sessionId;
  rerender();
  schedulePolling();
}

async function attachSession(): Promise<void> {
  const sessionId = ($("#session-id") as HTMLInputElement).value.trim();
  if (!sessionId) return;
  ctl = new SessionController(new ApiClient(currentBaseUrl()), window.localStorage);
  try {
    await ctl.attach(sessionId);
  } catch (err) {
    $("#view").innerHTML = `<p class="error">${(err as Error).message}</p>`;
    return;
  }
  rerender();
  schedulePolling();
}

function downloadExport(): void {
  if (!ctl) return;
  const blob = new Blob([ctl.exportPayload()], { type: "application/json" });
  const url = URL.createObjectURL(blob);
  const link = document.createElement("a");
  link.href = url;
  link.download = `anorank-session-${ctl.sessionId}.json`;
  link.click();
  URL.revokeObjectURL(url);
}

document.addEventListener("DOMContentLoaded", () => {
  $("#start").addEventListener("click", () => void startSession(false));
  $("#autopilot").addEventListener("click", () => void startSession(true));
  $("#attach").addEventListener("click", () => void attachSession());

  // event delegation for everything rendered inside #view
  $("#view").addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    if (!ctl) return;
    if (target.matches(".label-toggle")) {
      const sampleId = Number(target.dataset.sample);
      ctl.setLabel(sampleId, target.dataset.label as Label);
      rerender();
    } else if (target.id === "submit") {
      void ctl.submit().then(() => {
        rerender();
        void ctl?.pollUntil(["awaiting_labels", "finished"]).then(rerender);
      });
    } else if (target.id === "retry") {
      void (ctl.labels && ctl.canSubmit() ? ctl.submit() : ctl.refresh()).then(rerender);
    } else if (target.id === "export") {
      downloadExport();
    }
  });
});
