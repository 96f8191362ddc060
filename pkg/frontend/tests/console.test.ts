/**
 * Scripted session against a live hub instance: the full
 * warn -> propose -> opine -> arbitrate loop, faithful rendering, anonymity
 * at the wire, and the console's zero-authority property.
 */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiError, HubApi, type FetchLike } from "../src/api.js";
import { collect } from "../src/render.js";
import { ConsoleSession, ValidationError } from "../src/session.js";
import { fieldOfActionView } from "../src/views.js";

const PORT = 8650 + (process.pid % 200);
const BASE = `http://127.0.0.1:${PORT}`;

interface CapturedRequest {
  url: string;
  method: string;
  body: string;
  headers: Record<string, string>;
}

const captured: CapturedRequest[] = [];

const capturingFetch: FetchLike = (url, init) => {
  captured.push({
    url,
    method: init?.method ?? "GET",
    body: typeof init?.body === "string" ? init.body : "",
    headers: (init?.headers as Record<string, string>) ?? {},
  });
  return fetch(url, init);
};

let workdir: string;
let server: ChildProcess | null = null;

function run(cmd: string, args: string[]): void {
  const out = spawnSync(cmd, args, { cwd: workdir, encoding: "utf-8" });
  if (out.status !== 0) {
    throw new Error(`${cmd} ${args.join(" ")} failed: ${out.stderr}\n${out.stdout}`);
  }
}

async function waitForHealth(timeoutMs = 20000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const resp = await fetch(`${BASE}/health`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error("hub instance never became healthy");
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "console-"));
  run("refhub", ["init", "--instance", "live", "--listen", `127.0.0.1:${PORT}`]);
  run("refhub", ["load-fixture", "f1"]);
  run("python3", ["-c", [
    "from refhub.config import load_config",
    "from refhub.service import build_hub",
    "from refhub.fixtures import configure_f1_channels",
    "hub = build_hub(load_config('refhub.json'))",
    "configure_f1_channels(hub)",
    "hub.log.close()",
  ].join("\n")]);
  server = spawn("refhub", ["serve"], { cwd: workdir, stdio: "ignore" });
  await waitForHealth();
}, 30000);

afterAll(() => {
  if (server) server.kill();
  if (workdir) rmSync(workdir, { recursive: true, force: true });
});

describe("steward console against a live instance", () => {
  const api = new HubApi(BASE, capturingFetch);

  it("runs the warn -> propose -> opine -> arbitrate loop", async () => {
    const alice = new ConsoleSession(api, "alice");
    const bob = new ConsoleSession(api, "bob");
    await alice.connect();
    await bob.connect();

    // warn: reliability flips to Contested and shows up in alice's rows
    await alice.submitAction({ action: "warn", datum: "lab.budget", note: "stale" });
    expect(alice.row("lab.budget")?.reliability).toBe("Contested");

    // propose: appears UnderReview in bob's queue after his next poll
    const proposal = await alice.submitAction({
      action: "propose", datum: "lab.budget", value: 100, rationale: "uplift",
    });
    await bob.refresh();
    const queued = bob.queue.find((q) => q.proposal === proposal);
    expect(queued).toBeDefined();
    expect(queued!.awaiting).toContain("opinion");

    // opine without rationale: blocked client-side, no request sent
    const before = captured.length;
    await expect(
      bob.submitAction({ action: "opine", proposal, datum: "lab.budget", verdict: "Support", rationale: "  " }),
    ).rejects.toBeInstanceOf(ValidationError);
    expect(captured.length).toBe(before);

    await bob.submitAction({ action: "opine", proposal, datum: "lab.budget", verdict: "Support", rationale: "fits plan" });
    await bob.submitAction({ action: "arbitrate", proposal, datum: "lab.budget", decision: "Accept", rationale: "approved" });

    await alice.refresh();
    const settled = alice.row("lab.budget");
    expect(settled?.value).toEqual({ t: "integer", v: 100 });
    expect(settled?.version).toBe(2);
    expect(settled?.reliability).toBe("Golden");
    expect(bob.queue.find((q) => q.proposal === proposal)).toBeUndefined();

    // the trail timeline shows the whole episode
    const trail = await alice.openTrail("lab.budget");
    expect(trail.map((e) => e.kind)).toEqual(
      ["creation", "warning", "proposal", "opinion", "arbitration"]);
    expect(trail.find((e) => e.kind === "warning")).not.toHaveProperty("author");
  });

  it("renders exactly the API's field-of-action rows", async () => {
    const bob = new ConsoleSession(api, "bob");
    await bob.connect();
    const direct = await (await fetch(`${BASE}/field-of-action/bob`)).json();
    const tree = fieldOfActionView("bob", bob.rows);
    const rendered = collect(tree, (n) => n.attrs.class === "datum-row");
    expect(rendered.map((n) => n.attrs["data-datum"])).toEqual(
      direct.items.map((r: { datum: string }) => r.datum));
    expect(bob.rows).toEqual(direct.items);
  });

  it("sends no principal identifier in warn request bodies", async () => {
    const alice = new ConsoleSession(api, "alice");
    await alice.connect();
    const before = captured.length;
    await alice.submitAction({ action: "warn", datum: "lab->server.quota", note: "unverified quota" });
    const warns = captured.slice(before).filter((r) => r.url.endsWith("/warnings"));
    expect(warns).toHaveLength(1);
    expect(warns[0].body).not.toContain("alice");
    expect(warns[0].body).not.toContain("bob");
    expect(JSON.parse(warns[0].body)).toEqual({ datum: "lab->server.quota", note: "unverified quota" });
    // the credential rides in the header and is an opaque token
    expect(warns[0].headers["X-Session-Token"]).toMatch(/^[0-9a-f]{32}$/);
  });

  it("holds zero authority: disabled checks yield identical server decisions", async () => {
    const alice = new ConsoleSession(api, "alice");
    await alice.connect();
    const proposal = await alice.submitAction({
      action: "propose", datum: "alice->server.login", value: "alice07", rationale: "rotate",
    });

    // client-side gate would block arbitrate (alice resolves to PROPOSE)
    expect(alice.allowed("alice->server.login")).toEqual(["warn", "propose"]);

    // bypass every client check: the server separately refuses
    let consoleDecision: ApiError | null = null;
    try {
      await alice.submitAction(
        { action: "arbitrate", proposal, datum: "alice->server.login", decision: "Accept", rationale: "mine" },
        { validate: false },
      );
    } catch (err) {
      consoleDecision = err as ApiError;
    }
    expect(consoleDecision).toBeInstanceOf(ApiError);

    // replay the same raw request outside the console: identical decision
    const raw = await fetch(`${BASE}/arbitrations`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ arbiter: "alice", proposal, decision: "Accept", rationale: "mine" }),
    });
    const rawDoc = await raw.json();
    expect(raw.status).toBe(403);
    expect(rawDoc.error).toBe(consoleDecision!.code);
    expect(consoleDecision!.code).toBe("NotArbiter");
    // the rejection is surfaced verbatim for the UI
    expect(alice.lastError).toEqual({ code: "NotArbiter", detail: consoleDecision!.detail });

    // clean up the open proposal so other tests see a quiet queue
    const bob = new ConsoleSession(api, "bob");
    await bob.connect();
    await bob.submitAction({ action: "arbitrate", proposal, datum: "alice->server.login", decision: "Reject", rationale: "tidy up" });
  });

  it("shows an empty state for a principal with nothing to act on", async () => {
    // hrdb is a source, not an individual; use a fresh individual instead
    await fetch(`${BASE}/entities`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ kind: "Individual", id: "zoe", attrs: {} }),
    });
    const zoe = new ConsoleSession(api, "zoe");
    await zoe.connect();
    expect(zoe.rows).toEqual([]);
    const tree = fieldOfActionView("zoe", zoe.rows);
    expect(collect(tree, (n) => n.tag === "button")).toHaveLength(0);
  });
});
