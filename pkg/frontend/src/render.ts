/** Pure state -> HTML string rendering; main.ts owns the DOM and events.
 *
 * Keeping these pure keeps them testable in node: every view is a function
 * of (session state, pending cards, chosen labels).
 */

import { trajectorySvg } from "./chart.js";
import type { SessionController } from "./controller.js";
import type { Label, QueryCard, SessionState } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const fmt = (value: number | null | undefined, digits = 4): string =>
  value === null || value === undefined ? "–" : value.toFixed(digits);

export function renderStatus(state: SessionState): string {
  const counts = state.label_counts;
  return (
    `<div class="status">` +
    `<span class="badge phase-${state.phase}">${state.phase.replace("_", " ")}</span>` +
    `<span>iteration <strong>${state.iteration}</strong></span>` +
    `<span>labeled: <strong>${counts.normal}</strong> normal, ` +
    `<strong>${counts.anomaly}</strong> anomaly</span>` +
    `<span>queries used: <strong>${state.total_queries}</strong></span>` +
    (state.final_ndcg !== null ? `<span>final nDCG: <strong>${fmt(state.final_ndcg)}</strong></span>` : "") +
    `</div>`
  );
}

export function renderCard(card: QueryCard, chosen: Label | null, hasError: boolean): string {
  const features = card.active_features
    .map(
      (f) =>
        `<li><code>${escapeHtml(f.feature)}</code>` +
        (f.weight !== null ? ` <span class="weight">${f.weight.toFixed(3)}</span>` : "") +
        `</li>`,
    )
    .join("");
  const toggle = (label: Label, text: string) =>
    `<button type="button" class="label-toggle${chosen === label ? " chosen" : ""}" ` +
    `data-sample="${card.sample_id}" data-label="${label}">${text}</button>`;
  return (
    `<article class="card${hasError ? " card-error" : ""}" data-card="${card.sample_id}">` +
    `<header><strong>sample ${card.sample_id}</strong> <span>rank ${card.rank}</span></header>` +
    `<dl>` +
    `<dt>reconstruction error</dt><dd>${fmt(card.reconstruction_error)}</dd>` +
    `<dt>max similarity to labeled anomalies</dt><dd>${fmt(card.max_anomaly_similarity)}</dd>` +
    `</dl>` +
    `<details><summary>${card.active_features.length} active features</summary>` +
    `<ul class="features">${features}</ul></details>` +
    `<div class="choice">${toggle("normal", "Normal")}${toggle("anomaly", "Anomaly")}</div>` +
    `</article>`
  );
}

export function renderCards(ctl: SessionController): string {
  const pending = ctl.pendingIds();
  const labeled = ctl.labels?.labeledCount(pending) ?? 0;
  const cards = ctl.queries
    .map((card) =>
      renderCard(card, ctl.labels?.get(card.sample_id) ?? null, ctl.cardErrors.includes(card.sample_id)),
    )
    .join("");
  return (
    `<section class="cards">` +
    `<h2>label this batch (${labeled}/${pending.length})</h2>` +
    cards +
    `<button type="button" id="submit" ${ctl.canSubmit() ? "" : "disabled"}>` +
    `Submit ${pending.length} labels</button>` +
    (ctl.lastError ? `<p class="error">${escapeHtml(ctl.lastError)}</p>` : "") +
    `</section>`
  );
}

export function renderRankingTable(state: SessionState): string {
  const rows = state.top_ranking
    .map(
      (entry, i) =>
        `<tr><td>${i + 1}</td><td>${entry.sample_id}</td><td>${entry.score.toFixed(5)}</td></tr>`,
    )
    .join("");
  return (
    `<section class="ranking"><h2>top ranking</h2>` +
    `<table><thead><tr><th>#</th><th>sample</th><th>score</th></tr></thead>` +
    `<tbody>${rows || `<tr><td colspan="3">not ranked yet</td></tr>`}</tbody></table></section>`
  );
}

export function renderProgressPanel(state: SessionState): string {
  // the chart needs truth-backed metrics; otherwise show label counts only
  const points = state.history
    .filter((rec) => rec.ndcg !== null)
    .map((rec) => ({ iteration: rec.iteration, ndcg: rec.ndcg as number }));
  if (state.ground_truth_attached && points.length > 0) {
    return `<section class="progress"><h2>nDCG trajectory</h2>${trajectorySvg(points)}</section>`;
  }
  return (
    `<section class="progress"><h2>progress</h2>` +
    `<p>${state.history.length} iterations recorded, ` +
    `${state.label_counts.normal + state.label_counts.anomaly} labels given.</p></section>`
  );
}

export function renderView(ctl: SessionController): string {
  const state = ctl.state;
  if (!state) return `<p class="hint">start or attach a session above.</p>`;
  const banner = ctl.offline
    ? `<div class="banner">service unreachable, your labels are kept locally ` +
      `<button type="button" id="retry">Retry</button></div>`
    : "";
  if (state.phase === "finished") {
    return (
      banner +
      renderStatus(state) +
      renderProgressPanel(state) +
      renderRankingTable(state) +
      `<section class="export"><button type="button" id="export">Export history JSON</button></section>`
    );
  }
  if (state.phase === "training" || state.phase === "ranking") {
    return (
      banner +
      renderStatus(state) +
      `<div class="spinner">model is retraining, polling for the next batch…</div>` +
      renderProgressPanel(state) +
      renderRankingTable(state)
    );
  }
  return banner + renderStatus(state) + renderCards(ctl) + renderProgressPanel(state) + renderRankingTable(state);
}
