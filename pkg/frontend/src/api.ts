// Thin fetch client for the session service. Every state change goes
// through these endpoints; the console never touches the scene directly.

import type {
  CommandErrorDetail,
  ExportDocument,
  InterpreterBackend,
  RoundSummary,
  SceneSnapshot,
} from "./types";

export class ApiError extends Error {
  status: number;
  detail: CommandErrorDetail | null;

  constructor(status: number, detail: CommandErrorDetail | null, message?: string) {
    super(message ?? detail?.error ?? `request failed with ${status}`);
    this.name = "ApiError";
    this.status = status;
    this.detail = detail;
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface CommandOptions {
  render?: boolean;
  backend?: InterpreterBackend | null;
}

export class SessionClient {
  readonly baseUrl: string;
  private fetchFn: FetchLike;

  constructor(baseUrl = "", fetchFn: FetchLike = (u, i) => fetch(u, i)) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn;
  }

  async createSession(body: { scene?: object; seed?: number } = {}): Promise<string> {
    const res = await this.request("POST", "/sessions", body);
    return (res as { id: string }).id;
  }

  async sendCommand(
    sessionId: string,
    text: string,
    opts: CommandOptions = {},
  ): Promise<RoundSummary> {
    const body: Record<string, unknown> = { text, render: opts.render ?? true };
    if (opts.backend) body.backend = opts.backend;
    return (await this.request(
      "POST", `/sessions/${sessionId}/commands`, body,
    )) as RoundSummary;
  }

  async getScene(sessionId: string): Promise<SceneSnapshot> {
    return (await this.request("GET", `/sessions/${sessionId}/scene`)) as SceneSnapshot;
  }

  async getExport(sessionId: string): Promise<ExportDocument> {
    return (await this.request("GET", `/sessions/${sessionId}/export`)) as ExportDocument;
  }

  async deleteSession(sessionId: string): Promise<void> {
    await this.request("DELETE", `/sessions/${sessionId}`);
  }

  frameUrl(sessionId: string, n: number): string {
    return `${this.baseUrl}/sessions/${sessionId}/frames/${n}`;
  }

  private async request(method: string, path: string, body?: unknown): Promise<unknown> {
    const init: RequestInit = { method, headers: { "content-type": "application/json" } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const res = await this.fetchFn(this.baseUrl + path, init);
    if (!res.ok) {
      let detail: CommandErrorDetail | null = null;
      try {
        const parsed = (await res.json()) as { detail?: unknown };
        detail = normalizeDetail(parsed.detail);
      } catch {
        // non-JSON error body; keep detail null
      }
      throw new ApiError(res.status, detail);
    }
    return res.json();
  }
}

function normalizeDetail(detail: unknown): CommandErrorDetail | null {
  if (detail == null) return null;
  if (typeof detail === "string") return { error: detail };
  if (typeof detail === "object") return detail as CommandErrorDetail;
  return { error: String(detail) };
}
