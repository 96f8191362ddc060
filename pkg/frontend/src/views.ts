/**
 * The five console views, one per governance activity: field-of-action
 * browser, review queue, arbitration panel, audit-trail timeline, ranking
 * report. All are pure functions from API data to a VNode tree; every row
 * rendered comes straight from an API response.
 */

import type { FieldRow, QueueItem, RankRow, TrailEntry } from "./api.js";
import { rightAtLeast } from "./api.js";
import { h, type VNode } from "./render.js";

export type ActionName = "warn" | "propose" | "opine" | "arbitrate";

/** Buttons a row offers, decided by the right the API reported — never
 * computed locally. The warn button is always unmarked by identity. */
export function actionsFor(row: FieldRow): ActionName[] {
  const out: ActionName[] = [];
  if (rightAtLeast(row.right, "WARN")) out.push("warn");
  if (rightAtLeast(row.right, "PROPOSE")) out.push("propose");
  if (rightAtLeast(row.right, "EVALUATE")) out.push("opine");
  if (rightAtLeast(row.right, "ARBITRATE")) out.push("arbitrate");
  return out;
}

function valueText(v: FieldRow["value"]): string {
  return String(v.v);
}

export function fieldOfActionView(principal: string, rows: FieldRow[]): VNode {
  if (rows.length === 0) {
    return h("section", { class: "field-of-action empty" },
      h("p", { class: "empty-state" }, "Nothing in your field of action."));
  }
  return h("section", { class: "field-of-action" },
    h("h2", {}, `Field of action: ${principal}`),
    h("table", { class: "datum-table" },
      h("thead", {},
        h("tr", {},
          h("th", {}, "Datum"), h("th", {}, "Value"), h("th", {}, "Version"),
          h("th", {}, "Reliability"), h("th", {}, "Your right"),
          h("th", {}, "Actions"))),
      h("tbody", {},
        rows.map((row) =>
          h("tr", { class: "datum-row", "data-datum": row.datum },
            h("td", { class: "datum" }, row.datum),
            h("td", { class: "value" }, valueText(row.value)),
            h("td", { class: "version" }, `v${row.version}`),
            h("td", {}, h("span", { class: `badge badge-${row.reliability.toLowerCase()}` }, row.reliability)),
            h("td", { class: "right" }, row.right),
            h("td", { class: "actions" },
              actionsFor(row).map((a) =>
                h("button", { class: `action action-${a}`, "data-action": a, "data-datum": row.datum }, a))))))));
}

export function reviewQueueView(items: QueueItem[]): VNode {
  if (items.length === 0) {
    return h("section", { class: "review-queue empty" },
      h("p", { class: "empty-state" }, "Nothing awaits your review."));
  }
  return h("section", { class: "review-queue" },
    h("h2", {}, "Review queue"),
    h("ul", { class: "queue" },
      items.map((item) =>
        h("li", { class: "queue-item", "data-proposal": item.proposal },
          h("span", { class: "datum" }, item.datum),
          h("span", { class: "proposed-value" }, String(item.value.v)),
          h("span", { class: "author" }, item.author),
          h("span", { class: "rationale" }, item.rationale),
          h("span", { class: "awaiting" }, item.awaiting.join("+"))))));
}

export function arbitrationPanelView(items: QueueItem[]): VNode {
  const mine = items.filter((i) => i.awaiting.includes("arbitration"));
  return h("section", { class: "arbitration-panel" },
    h("h2", {}, "Awaiting arbitration"),
    mine.length === 0
      ? h("p", { class: "empty-state" }, "No proposal awaits your ruling.")
      : h("ul", {},
          mine.map((item) =>
            h("li", { class: "arbitration-item", "data-proposal": item.proposal },
              h("span", { class: "datum" }, item.datum),
              h("span", { class: "proposed-value" }, String(item.value.v)),
              h("button", { class: "action action-accept", "data-proposal": item.proposal, "data-decision": "Accept" }, "Accept"),
              h("button", { class: "action action-reject", "data-proposal": item.proposal, "data-decision": "Reject" }, "Reject")))));
}

const TRAIL_LABELS: Record<string, (e: TrailEntry) => string> = {
  creation: (e) => `v${e.version} created = ${String(e.value?.v)}`,
  warning: (e) => `warning: ${e.note ?? ""}`,
  proposal: (e) => `${e.author} proposed ${String(e.value?.v)} (${e.rationale ?? ""})`,
  opinion: (e) => `${e.author} ${e.verdict === "Support" ? "supported" : "objected"}: ${e.rationale ?? ""}`,
  arbitration: (e) => `${e.author} ruled ${e.decision}${e.version ? ` -> v${e.version}` : ""}`,
  derived: (e) => `rule ${e.rule} derived v${e.version} = ${String(e.value?.v)}`,
  federated: (e) => `synced v${e.version} from ${e.origin}`,
  ingested: (e) => `ingested v${e.version}`,
  superseded: () => "superseded by a synced change",
};

export function trailTimelineView(datum: string, entries: TrailEntry[]): VNode {
  return h("section", { class: "trail-timeline" },
    h("h2", {}, `Audit trail: ${datum}`),
    h("ol", { class: "timeline" },
      entries.map((e) =>
        h("li", { class: `trail-entry trail-${e.kind}`, "data-seq": String(e.seq) },
          h("span", { class: "kind" }, e.kind),
          h("span", { class: "label" }, (TRAIL_LABELS[e.kind] ?? (() => ""))(e))))));
}

export function rankingReportView(rows: RankRow[]): VNode {
  return h("section", { class: "ranking-report" },
    h("h2", {}, "Agreement ranking"),
    h("table", { class: "rank-table" },
      h("thead", {}, h("tr", {},
        h("th", {}, "Subject"), h("th", {}, "Kind"),
        h("th", {}, "Score"), h("th", {}, "Accepted/Arbitrated"))),
      h("tbody", {},
        rows.map((r) =>
          h("tr", { class: "rank-row", "data-subject": r.subject },
            h("td", {}, r.subject),
            h("td", {}, r.kind),
            h("td", { class: "score" }, r.score === null ? "unranked" : r.score.toFixed(2)),
            h("td", {}, `${r.accepted}/${r.arbitrated}`))))));
}
