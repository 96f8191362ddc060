/**
 * Browser entry: mount the console against a hub instance.
 *
 * Query parameters: ?principal=<id>&hub=<base url, default same origin>.
 * The review queue is polled; there is no push channel.
 */

import { HubApi } from "./api.js";
import { h, toDom, type VNode } from "./render.js";
import { ConsoleSession } from "./session.js";
import {
  arbitrationPanelView,
  fieldOfActionView,
  rankingReportView,
  reviewQueueView,
  trailTimelineView,
} from "./views.js";

function page(session: ConsoleSession, ranking: VNode, trail: VNode | null): VNode {
  return h("main", { class: "console" },
    h("header", {},
      h("h1", {}, "Reference-data console"),
      h("p", { class: "whoami" }, `Signed in as ${session.principal}`)),
    fieldOfActionView(session.principal, session.rows),
    reviewQueueView(session.queue),
    arbitrationPanelView(session.queue),
    trail ?? h("section", { class: "trail-timeline empty" }),
    ranking);
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const principal = params.get("principal") ?? "alice";
  const base = params.get("hub") ?? "";
  const api = new HubApi(base);
  const session = new ConsoleSession(api, principal);
  await session.connect();

  const root = document.getElementById("root") ?? document.body;

  async function redraw(): Promise<void> {
    const ranking = rankingReportView(await api.rank());
    const trail = session.trailDatum
      ? trailTimelineView(session.trailDatum, session.trailEntries)
      : null;
    root.replaceChildren(toDom(page(session, ranking, trail), document));
  }

  root.addEventListener("click", (ev) => {
    const el = ev.target as HTMLElement;
    const action = el.dataset.action;
    const datum = el.dataset.datum;
    void (async () => {
      if (el.dataset.decision && el.dataset.proposal) {
        const rationale = window.prompt("Rationale") ?? "";
        const item = session.queue.find((q) => q.proposal === el.dataset.proposal);
        if (!item) return;
        await session.submitAction({
          action: "arbitrate", proposal: item.proposal, datum: item.datum,
          decision: el.dataset.decision as "Accept" | "Reject", rationale,
        }).catch(reportError);
      } else if (action === "warn" && datum) {
        const note = window.prompt("What looks wrong?") ?? "";
        await session.submitAction({ action: "warn", datum, note }).catch(reportError);
      } else if (action === "propose" && datum) {
        const value = window.prompt("New value") ?? "";
        const rationale = window.prompt("Rationale") ?? "";
        const asNumber = Number(value);
        await session.submitAction({
          action: "propose", datum,
          value: Number.isInteger(asNumber) && value.trim() !== "" ? asNumber : value,
          rationale,
        }).catch(reportError);
      } else if (action === "opine" && datum) {
        const item = session.queue.find((q) => q.datum === datum);
        if (!item) return;
        const rationale = window.prompt("Reasoned opinion (required)") ?? "";
        await session.submitAction({
          action: "opine", proposal: item.proposal, datum,
          verdict: window.confirm("Support?") ? "Support" : "Object", rationale,
        }).catch(reportError);
      } else if (el.classList.contains("datum") && el.textContent) {
        await session.openTrail(el.textContent);
      }
      await redraw();
    })();
  });

  function reportError(err: unknown): void {
    // server rejections are shown verbatim, code and all
    window.alert(String(err));
  }

  session.startPolling();
  setInterval(() => void redraw(), 4000);
  await redraw();
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  void boot();
}
