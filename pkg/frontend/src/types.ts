/** Payload shapes of the oracle service API (the console's only backend). */

export type Label = "normal" | "anomaly";

export type Phase = "awaiting_labels" | "training" | "ranking" | "finished";

export interface ActiveFeature {
  feature: string;
  weight: number | null;
}

export interface QueryCard {
  sample_id: number;
  rank: number;
  reconstruction_error: number | null;
  max_anomaly_similarity: number | null;
  active_features: ActiveFeature[];
}

export interface QueriesResponse {
  session_id: string;
  iteration: number;
  queries: QueryCard[];
}

export interface RankedEntry {
  sample_id: number;
  score: number;
}

export interface HistoryRecord {
  iteration: number;
  queried: number[];
  labels: Record<string, Label>;
  ndcg: number | null;
}

export interface SessionState {
  session_id: string;
  phase: Phase;
  iteration: number;
  pending_count: number;
  label_counts: { normal: number; anomaly: number };
  total_queries: number;
  top_ranking: RankedEntry[];
  history: HistoryRecord[];
  final_ndcg: number | null;
  ground_truth_attached: boolean;
  config: Record<string, unknown>;
  error: string | null;
  updated_at: string;
}

export interface StartSessionResponse {
  session_id: string;
  phase: Phase;
  config: Record<string, unknown>;
}

export interface ServiceErrorBody {
  code: string;
  message: string;
  details: unknown;
}
