/** Session state machine behind the console UI.
 *
 * Owns the polled service state, the pending query cards and the label
 * choices for the current batch. The only mutating call it ever makes is
 * submit(); everything else is a read. Submission is guarded so a double
 * click produces a single request, a conflict answer reloads state, and a
 * network failure flips the offline flag while keeping every chosen label.
 */

import { ApiClient, ApiError } from "./api.js";
import { LabelStore, type KeyValueStore } from "./labelStore.js";
import type { Label, Phase, QueryCard, SessionState } from "./types.js";

const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export class SessionController {
  state: SessionState | null = null;
  queries: QueryCard[] = [];
  queriesIteration = -1;
  labels: LabelStore | null = null;
  submitting = false;
  offline = false;
  /** sample ids the service rejected in the last submit (validation error) */
  cardErrors: number[] = [];
  lastError: string | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly storage: KeyValueStore,
    readonly pollIntervalMs = 1000,
  ) {}

  get sessionId(): string {
    if (!this.state) throw new Error("no session attached");
    return this.state.session_id;
  }

  async start(config: Record<string, unknown>, autopilot = false): Promise<void> {
    const created = await this.api.startSession(config, autopilot);
    await this.attach(created.session_id);
  }

  async attach(sessionId: string): Promise<void> {
    this.state = await this.api.getState(sessionId);
    await this.syncQueries();
  }

  /** One poll tick: refresh state and, when a new batch is pending, its cards. */
  async refresh(): Promise<void> {
    if (!this.state) return;
    try {
      this.state = await this.api.getState(this.sessionId);
      this.offline = false;
    } catch (err) {
      if (err instanceof ApiError) throw err;
      this.offline = true; // network drop: keep local labels, offer retry
      return;
    }
    await this.syncQueries();
  }

  private async syncQueries(): Promise<void> {
    if (!this.state || this.state.phase !== "awaiting_labels") return;
    const batchIteration = this.state.iteration;
    if (this.queriesIteration === batchIteration && this.queries.length > 0) return;
    const response = await this.api.getQueries(this.sessionId);
    this.queries = response.queries;
    this.queriesIteration = batchIteration;
    this.labels = new LabelStore(this.storage, this.sessionId, response.iteration);
    this.cardErrors = [];
  }

  pendingIds(): number[] {
    return this.queries.map((card) => card.sample_id);
  }

  setLabel(sampleId: number, label: Label | null): void {
    this.labels?.set(sampleId, label);
  }

  canSubmit(): boolean {
    return (
      !this.submitting &&
      this.state?.phase === "awaiting_labels" &&
      this.labels !== null &&
      this.labels.isComplete(this.pendingIds())
    );
  }

  /** POST the batch. Returns true when the service accepted it. */
  async submit(): Promise<boolean> {
    if (this.submitting) return false; // double-click guard: one in-flight request
    if (!this.state || !this.labels || !this.canSubmit()) return false;
    this.submitting = true;
    this.lastError = null;
    try {
      await this.api.submitLabels(this.sessionId, this.labels.all());
      this.labels.clear();
      this.queries = [];
      this.queriesIteration = -1;
      this.state = { ...this.state, phase: "training" };
      return true;
    } catch (err) {
      if (err instanceof ApiError) {
        this.lastError = err.message;
        if (err.status === 409) {
          await this.refresh(); // conflict: someone advanced the session; reload
        } else if (err.status === 400) {
          const details = err.body.details as { missing?: number[]; extra?: number[] } | null;
          this.cardErrors = [...(details?.missing ?? []), ...(details?.extra ?? [])];
        }
        return false;
      }
      this.offline = true; // network drop mid-submit: labels stay in the store
      this.lastError = "network error, labels kept locally";
      return false;
    } finally {
      this.submitting = false;
    }
  }

  /** Poll every pollIntervalMs until the phase is one of `phases`. */
  async pollUntil(phases: Phase[], timeoutMs = 120_000): Promise<SessionState> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      await this.refresh();
      if (this.state?.error) throw new Error(`session failed: ${this.state.error}`);
      if (this.state && phases.includes(this.state.phase)) return this.state;
      if (Date.now() > deadline) throw new Error(`timed out waiting for ${phases.join("/")}`);
      await sleep(this.pollIntervalMs);
    }
  }

  /** JSON blob for the export button on the finished view. */
  exportPayload(): string {
    if (!this.state) throw new Error("no session attached");
    return JSON.stringify(
      {
        session_id: this.state.session_id,
        config: this.state.config,
        history: this.state.history,
        top_ranking: this.state.top_ranking,
        final_ndcg: this.state.final_ndcg,
        label_counts: this.state.label_counts,
        total_queries: this.state.total_queries,
      },
      null,
      2,
    );
  }
}
