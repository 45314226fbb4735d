// Thin typed client for the session REST API. Every mutation goes through
// advance() with a fresh request id; replaying an id is safe server-side,
// but the UI never reuses one except for explicit retries of the same
// action.

import type { ApiError, ExecutionResult, SessionView } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiFailure extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, body: ApiError) {
    super(body.message);
    this.status = status;
    this.code = body.code;
  }
}

let counter = 0;

export function freshRequestId(prefix = "ui"): string {
  counter += 1;
  const noise = Math.random().toString(36).slice(2, 8);
  return `${prefix}-${counter}-${noise}`;
}

export class SessionApi {
  private readonly base: string;
  private readonly fetcher: FetchLike;

  constructor(baseUrl: string, fetcher: FetchLike = fetch.bind(globalThis)) {
    this.base = baseUrl.replace(/\/$/, "");
    this.fetcher = fetcher;
  }

  private async parse<T>(response: Response): Promise<T> {
    const body = await response.json();
    if (!response.ok) {
      throw new ApiFailure(response.status, body as ApiError);
    }
    return body as T;
  }

  async createSession(query: string, mode: "automatic" | "control"): Promise<SessionView> {
    const response = await this.fetcher(`${this.base}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ query, mode }),
    });
    return this.parse<SessionView>(response);
  }

  async getSession(id: string): Promise<SessionView> {
    return this.parse<SessionView>(await this.fetcher(`${this.base}/sessions/${id}`));
  }

  async advance(
    id: string,
    override: string[] | null,
    requestId: string = freshRequestId(),
  ): Promise<SessionView> {
    const body: Record<string, unknown> = { request_id: requestId };
    if (override !== null) {
      body.override = override;
    }
    const response = await this.fetcher(`${this.base}/sessions/${id}/advance`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return this.parse<SessionView>(response);
  }

  async getResult(id: string): Promise<ExecutionResult> {
    return this.parse<ExecutionResult>(
      await this.fetcher(`${this.base}/sessions/${id}/result`),
    );
  }
}
