/** Thin client over the documented HTTP API; no other backends. */

import type { AgentTurn, ChartSpec, SessionRecord } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function throwApiError(response: Response): Promise<never> {
  let code = "http_error";
  let message = `HTTP ${response.status}`;
  try {
    const body = await response.json();
    if (body && body.error) {
      code = body.error.code ?? code;
      message = body.error.message ?? message;
    }
  } catch {
    // non-JSON error body; keep the generic message
  }
  throw new ApiError(response.status, code, message);
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      await throwApiError(response);
    }
    return response;
  }

  async createSession(): Promise<string> {
    const response = await this.request("/api/sessions", { method: "POST" });
    const body = await response.json();
    return body.session_id as string;
  }

  async getSession(sessionId: string): Promise<SessionRecord> {
    const response = await this.request(`/api/sessions/${encodeURIComponent(sessionId)}`);
    return (await response.json()) as SessionRecord;
  }

  async sendMessage(sessionId: string, message: string): Promise<AgentTurn> {
    const response = await this.request(
      `/api/sessions/${encodeURIComponent(sessionId)}/messages`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ message }),
      },
    );
    return (await response.json()) as AgentTurn;
  }

  async getChart(chartId: string): Promise<ChartSpec> {
    const response = await this.request(`/api/charts/${encodeURIComponent(chartId)}`);
    return (await response.json()) as ChartSpec;
  }

  async getStats(): Promise<Record<string, unknown>> {
    const response = await this.request("/api/stats");
    return (await response.json()) as Record<string, unknown>;
  }
}
