import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { trajectorySvg } from "../src/chart.js";
import { SessionController } from "../src/controller.js";
import { LabelStore, MemoryStore } from "../src/labelStore.js";
import { escapeHtml, renderCard, renderView } from "../src/render.js";
import type { QueryCard, SessionState } from "../src/types.js";

const CARD: QueryCard = {
  sample_id: 12,
  rank: 1,
  reconstruction_error: 0.42,
  max_anomaly_similarity: 0.9,
  active_features: [{ feature: "<evil>&co", weight: 0.7 }],
};

function controllerInState(state: SessionState, queries: QueryCard[] = []): SessionController {
  const ctl = new SessionController(new ApiClient("http://x"), new MemoryStore());
  ctl.state = state;
  ctl.queries = queries;
  return ctl;
}

function baseState(overrides: Partial<SessionState>): SessionState {
  return {
    session_id: "s",
    phase: "awaiting_labels",
    iteration: 2,
    pending_count: 1,
    label_counts: { normal: 5, anomaly: 1 },
    total_queries: 6,
    top_ranking: [{ sample_id: 3, score: 1.25 }],
    history: [
      { iteration: 1, queried: [1], labels: { "1": "normal" }, ndcg: 0.5 },
      { iteration: 2, queried: [2], labels: { "2": "anomaly" }, ndcg: 0.8 },
    ],
    final_ndcg: null,
    ground_truth_attached: true,
    config: {},
    error: null,
    updated_at: "now",
    ...overrides,
  };
}

describe("rendering", () => {
  it("escapes feature names", () => {
    const html = renderCard(CARD, null, false);
    expect(html).toContain("&lt;evil&gt;&amp;co");
    expect(html).not.toContain("<evil>");
  });

  it("marks the chosen label and flags card errors", () => {
    expect(renderCard(CARD, "anomaly", false)).toContain('data-label="anomaly">Anomaly');
    expect(renderCard(CARD, "anomaly", false)).toMatch(/chosen[^>]*data-sample="12" data-label="anomaly"/);
    expect(renderCard(CARD, null, true)).toContain("card-error");
  });

  it("disables submit until all cards are labeled", () => {
    const ctl = controllerInState(baseState({}), [CARD]);
    ctl.labels = new LabelStore(new MemoryStore(), "s", 2);
    expect(renderView(ctl)).toContain('id="submit" disabled');
    expect(renderView(ctl)).toContain("(0/1)");
    ctl.labels.set(12, "normal");
    expect(renderView(ctl)).toContain('id="submit" >');
    expect(renderView(ctl)).toContain("(1/1)");
  });

  it("training phase shows the polling spinner", () => {
    const html = renderView(controllerInState(baseState({ phase: "training" })));
    expect(html).toContain("retraining");
    expect(html).not.toContain('id="submit"');
  });

  it("finished phase shows export button and final ranking", () => {
    const html = renderView(
      controllerInState(baseState({ phase: "finished", final_ndcg: 0.91 })),
    );
    expect(html).toContain('id="export"');
    expect(html).toContain("0.9100");
    expect(html).toContain("<td>3</td>");
  });

  it("renders the trajectory chart only with ground truth attached", () => {
    const withTruth = renderView(controllerInState(baseState({ phase: "training" })));
    expect(withTruth).toContain("<svg");
    const noTruth = renderView(
      controllerInState(
        baseState({
          phase: "training",
          ground_truth_attached: false,
          history: [{ iteration: 1, queried: [1], labels: {}, ndcg: null }],
        }),
      ),
    );
    expect(noTruth).not.toContain("<svg");
    expect(noTruth).toContain("labels given");
  });

  it("offline flag renders the retry banner", () => {
    const ctl = controllerInState(baseState({}), [CARD]);
    ctl.offline = true;
    expect(renderView(ctl)).toContain('id="retry"');
  });

  it("escapeHtml covers the dangerous characters", () => {
    expect(escapeHtml(`<a href="x">&`)).toBe("&lt;a href=&quot;x&quot;&gt;&amp;");
  });
});

describe("trajectorySvg", () => {
  it("draws one dot per iteration and a path", () => {
    const svg = trajectorySvg([
      { iteration: 1, ndcg: 0.2 },
      { iteration: 2, ndcg: 0.6 },
      { iteration: 3, ndcg: 1.0 },
    ]);
    expect(svg.match(/<circle/g)?.length).toBe(3);
    expect(svg).toContain('<path d="M');
    expect(svg).toContain("iteration 1..3");
  });

  it("handles an empty series", () => {
    expect(trajectorySvg([])).not.toContain("<path");
  });
});
