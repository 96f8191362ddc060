/**
 * Typed client for the refhub HTTP API.
 *
 * The console talks to the hub through this module only. Server rejections
 * surface as ApiError carrying the server's error code and detail verbatim.
 * Warnings are the one authenticated-but-anonymous call: the session token
 * travels as a header, the body names only the datum and note.
 */

export type Tagged = { t: "text" | "integer" | "decimal" | "date" | "token"; v: string | number };

export interface FieldRow {
  datum: string;
  right: "NONE" | "READ" | "WARN" | "PROPOSE" | "EVALUATE" | "ARBITRATE";
  value: Tagged;
  version: number;
  reliability: "Unverified" | "Proposed" | "Contested" | "Golden";
}

export interface QueueItem {
  proposal: string;
  datum: string;
  author: string;
  value: Tagged;
  rationale: string;
  seq: number;
  awaiting: ("opinion" | "arbitration")[];
}

export interface TrailEntry {
  seq: number;
  kind: string;
  id?: string;
  author?: string;
  value?: Tagged;
  version?: number;
  rationale?: string;
  note?: string;
  verdict?: string;
  decision?: string;
  origin?: string;
  rule?: string;
}

export interface RankRow {
  subject: string;
  kind: "channel" | "source";
  accepted: number;
  arbitrated: number;
  score: number | null;
}

export class ApiError extends Error {
  constructor(
    public code: string,
    public detail: string,
    public status: number,
  ) {
    super(`${code}: ${detail}`);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class HubApi {
  constructor(
    private baseUrl: string,
    private fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown, headers?: Record<string, string>): Promise<T> {
    const init: RequestInit = { method, headers: { ...headers } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
      (init.headers as Record<string, string>)["content-type"] = "application/json";
    }
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    const doc = (await resp.json()) as Record<string, unknown>;
    if (!resp.ok) {
      throw new ApiError(String(doc.error ?? "UnknownError"), String(doc.detail ?? ""), resp.status);
    }
    return doc as T;
  }

  health() {
    return this.request<{ status: string; instance: string; seq: number }>("GET", "/health");
  }

  async openSession(principal: string): Promise<string> {
    const doc = await this.request<{ token: string }>("POST", "/sessions", { principal });
    return doc.token;
  }

  async fieldOfAction(principal: string): Promise<FieldRow[]> {
    const doc = await this.request<{ items: FieldRow[] }>("GET", `/field-of-action/${principal}`);
    return doc.items;
  }

  async reviewQueue(principal: string): Promise<QueueItem[]> {
    const doc = await this.request<{ items: QueueItem[] }>("GET", `/review-queue/${principal}`);
    return doc.items;
  }

  async trail(datum: string): Promise<TrailEntry[]> {
    const doc = await this.request<{ items: TrailEntry[] }>("GET", `/trail/${datum}`);
    return doc.items;
  }

  async rank(scope?: string): Promise<RankRow[]> {
    const q = scope ? `?scope=${encodeURIComponent(scope)}` : "";
    const doc = await this.request<{ items: RankRow[] }>("GET", `/rank${q}`);
    return doc.items;
  }

  /** Anonymous at the wire: token header only, no principal in the body. */
  warn(datum: string, note: string, sessionToken: string) {
    return this.request<{ warning: string; reliability: string }>("POST", "/warnings", { datum, note }, { "X-Session-Token": sessionToken });
  }

  propose(author: string, datum: string, value: Tagged | number | string, rationale: string) {
    return this.request<{ proposal: string; state: string }>("POST", "/proposals", { author, datum, value, rationale });
  }

  opine(evaluator: string, proposal: string, verdict: "Support" | "Object", rationale: string) {
    return this.request<{ opinion: string }>("POST", "/opinions", { evaluator, proposal, verdict, rationale });
  }

  arbitrate(arbiter: string, proposal: string, decision: "Accept" | "Reject", rationale: string) {
    return this.request<{ arbitration: string; state: string }>("POST", "/arbitrations", { arbiter, proposal, decision, rationale });
  }

  visibility(interventionId: string) {
    return this.request<{ individuals: string[] }>("GET", `/visibility/${interventionId}`);
  }
}

export const RIGHT_ORDER = ["NONE", "READ", "WARN", "PROPOSE", "EVALUATE", "ARBITRATE"] as const;

export function rightAtLeast(right: FieldRow["right"], needed: FieldRow["right"]): boolean {
  return RIGHT_ORDER.indexOf(right) >= RIGHT_ORDER.indexOf(needed);
}
