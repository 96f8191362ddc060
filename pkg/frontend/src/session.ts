/**
 * One steward's console session: their field of action, review queue, trail
 * viewer, and action submission.
 *
 * The session holds zero authority. Client-side checks only mirror what the
 * API already reported (the row's resolved right, the non-empty-rationale
 * rule) to save a round trip; disabling them changes which requests are sent,
 * never what the server decides. Every submit is exactly one API call,
 * followed by a refresh of the affected row and the review queue.
 */

import { ApiError, HubApi, type FieldRow, type QueueItem, type Tagged, type TrailEntry } from "./api.js";
import { actionsFor, type ActionName } from "./views.js";

export interface WarnPayload {
  action: "warn";
  datum: string;
  note: string;
}

export interface ProposePayload {
  action: "propose";
  datum: string;
  value: Tagged | number | string;
  rationale: string;
}

export interface OpinePayload {
  action: "opine";
  proposal: string;
  datum: string;
  verdict: "Support" | "Object";
  rationale: string;
}

export interface ArbitratePayload {
  action: "arbitrate";
  proposal: string;
  datum: string;
  decision: "Accept" | "Reject";
  rationale: string;
}

export type ActionPayload = WarnPayload | ProposePayload | OpinePayload | ArbitratePayload;

export class ValidationError extends Error {}

export class ConsoleSession {
  rows: FieldRow[] = [];
  queue: QueueItem[] = [];
  trailDatum: string | null = null;
  trailEntries: TrailEntry[] = [];
  lastError: { code: string; detail: string } | null = null;
  private token: string | null = null;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private api: HubApi,
    readonly principal: string,
  ) {}

  async connect(): Promise<void> {
    this.token = await this.api.openSession(this.principal);
    await this.refresh();
  }

  async refresh(): Promise<void> {
    this.rows = await this.api.fieldOfAction(this.principal);
    this.queue = await this.api.reviewQueue(this.principal);
  }

  async openTrail(datum: string): Promise<TrailEntry[]> {
    this.trailDatum = datum;
    this.trailEntries = await this.api.trail(datum);
    return this.trailEntries;
  }

  row(datum: string): FieldRow | undefined {
    return this.rows.find((r) => r.datum === datum);
  }

  allowed(datum: string): ActionName[] {
    const row = this.row(datum);
    return row ? actionsFor(row) : [];
  }

  /** Exactly one API call per submission; rejections surface verbatim. */
  async submitAction(payload: ActionPayload, opts: { validate?: boolean } = {}): Promise<string> {
    const validate = opts.validate ?? true;
    if (validate) this.validate(payload);
    this.lastError = null;
    try {
      const id = await this.send(payload);
      await this.refresh();
      if (this.trailDatum === payload.datum) await this.openTrail(payload.datum);
      return id;
    } catch (err) {
      if (err instanceof ApiError) {
        this.lastError = { code: err.code, detail: err.detail };
      }
      throw err;
    }
  }

  private validate(payload: ActionPayload): void {
    const needed: Record<ActionName, FieldRow["right"]> = {
      warn: "WARN",
      propose: "PROPOSE",
      opine: "EVALUATE",
      arbitrate: "ARBITRATE",
    };
    if (!this.allowed(payload.datum).includes(payload.action)) {
      throw new ValidationError(`your right does not permit ${payload.action} on ${payload.datum} (needs ${needed[payload.action]})`);
    }
    if (payload.action === "opine" && payload.rationale.trim() === "") {
      throw new ValidationError("an opinion must carry a rationale");
    }
  }

  private send(payload: ActionPayload): Promise<string> {
    switch (payload.action) {
      case "warn": {
        if (!this.token) throw new ValidationError("no session");
        // body: datum and note only; the token header is the sole credential
        return this.api.warn(payload.datum, payload.note, this.token).then((d) => d.warning);
      }
      case "propose":
        return this.api.propose(this.principal, payload.datum, payload.value, payload.rationale).then((d) => d.proposal);
      case "opine":
        return this.api.opine(this.principal, payload.proposal, payload.verdict, payload.rationale).then((d) => d.opinion);
      case "arbitrate":
        return this.api.arbitrate(this.principal, payload.proposal, payload.decision, payload.rationale).then((d) => d.arbitration);
    }
  }

  startPolling(intervalMs = 4000): void {
    this.stopPolling();
    this.timer = setInterval(() => {
      void this.refresh();
    }, intervalMs);
  }

  stopPolling(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }
}
