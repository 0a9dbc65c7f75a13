/** Thin typed client over fetch; every console call to the service goes here. */

import type {
  Label,
  QueriesResponse,
  ServiceErrorBody,
  SessionState,
  StartSessionResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: ServiceErrorBody,
  ) {
    super(`${body.code}: ${body.message}`);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let body: ServiceErrorBody;
      try {
        body = (await response.json()) as ServiceErrorBody;
      } catch {
        body = { code: "http_error", message: response.statusText, details: null };
      }
      throw new ApiError(response.status, body);
    }
    return (await response.json()) as T;
  }

  healthz(): Promise<{ status: string }> {
    return this.request("/healthz");
  }

  startSession(
    config: Record<string, unknown>,
    autopilot = false,
  ): Promise<StartSessionResponse> {
    return this.request("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ config, autopilot }),
    });
  }

  getState(sessionId: string): Promise<SessionState> {
    return this.request(`/sessions/${sessionId}/state`);
  }

  getQueries(sessionId: string): Promise<QueriesResponse> {
    return this.request(`/sessions/${sessionId}/queries`);
  }

  submitLabels(
    sessionId: string,
    labels: Record<number, Label>,
  ): Promise<{ iteration: number; phase: string }> {
    return this.request(`/sessions/${sessionId}/labels`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ labels }),
    });
  }
}
