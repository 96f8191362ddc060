"""Independent oracles: brute-force reimplementations used to check the hub.

Everything here works on plain-data graph descriptions and enumerates edges
directly; none of it calls into the package's derivation, rights, or ranking
code paths.
"""

from __future__ import annotations

import random

KINDS = ["Individual", "Resource", "Structure", "Product", "ExternalSource",
         "Authority"]

RIGHT_ORDER = ["NONE", "READ", "WARN", "PROPOSE", "EVALUATE", "ARBITRATE"]


def r(name: str) -> int:
    return RIGHT_ORDER.index(name.upper())


class GraphDesc:
    """Plain description of a graph: kinds, specific attrs, edges."""

    def __init__(self):
        self.kinds: dict[str, str] = {}
        self.spec_attrs: dict[str, list[str]] = {}
        self.edges: list[tuple[str, str, list[str], bool]] = []

    def add_entity(self, eid: str, kind: str, attrs=()):
        self.kinds[eid] = kind
        self.spec_attrs[eid] = list(attrs)

    def add_edge(self, p: str, c: str, attrs=(), relevance=False):
        self.edges.append((p, c, list(attrs), relevance))

    # -- brute-force derivations ------------------------------------------

    def community(self, e: str) -> set[str]:
        out = set()
        for p, c, _, _ in self.edges:
            if p == e and self.kinds[c] == "Individual":
                out.add(c)
            if c == e and self.kinds[p] == "Individual":
                out.add(p)
        return out

    def collection(self, e: str) -> set[str]:
        out = {f"{e}.{a}" for a in self.spec_attrs[e]}
        for p, c, attrs, _ in self.edges:
            if c == e:
                out |= {f"{p}->{c}.{a}" for a in attrs}
            if p == e:
                out |= {f"{p}->{c}.{a}" for a in attrs}
                for q, c2, attrs2, rel2 in self.edges:
                    if c2 == c and q != e and rel2:
                        out |= {f"{q}->{c2}.{a}" for a in attrs2}
        return out

    def field_of_action(self, i: str) -> set[str]:
        out = set()
        for p, c, _, _ in self.edges:
            if p == i:
                out |= self.collection(c)
            if c == i:
                out |= self.collection(p)
        return out

    def area(self, datum: str) -> set[str]:
        out = set()
        for e in self.kinds:
            if datum in self.collection(e):
                out |= self.community(e)
        return out

    def all_datums(self) -> set[str]:
        out = set()
        for e, attrs in self.spec_attrs.items():
            out |= {f"{e}.{a}" for a in attrs}
        for p, c, attrs, _ in self.edges:
            out |= {f"{p}->{c}.{a}" for a in attrs}
        return out


def random_graph(rng: random.Random, max_entities: int = 20,
                 max_edges: int = 40) -> GraphDesc:
    """Mixed-kind random graph with role attrs on some individual edges."""
    g = GraphDesc()
    n = rng.randint(2, max_entities)
    for i in range(n):
        kind = rng.choice(KINDS)
        attrs = [f"a{j}" for j in range(rng.randint(0, 3))]
        g.add_entity(f"e{i}", kind, attrs)
    ids = list(g.kinds)
    tries = rng.randint(0, max_edges)
    seen = set()
    for _ in range(tries):
        p, c = rng.choice(ids), rng.choice(ids)
        if p == c or (p, c) in seen:
            continue
        seen.add((p, c))
        attrs = []
        if g.kinds[c] == "Individual" or g.kinds[p] == "Individual":
            if rng.random() < 0.7:
                attrs.append("role")
        attrs += [f"x{j}" for j in range(rng.randint(0, 2))]
        g.add_edge(p, c, attrs, relevance=rng.random() < 0.3)
    return g


def build_hub_from(desc: GraphDesc, hub) -> None:
    """Mirror a description into a hub instance (role tokens deterministic)."""
    for eid in sorted(desc.kinds):
        attrs = {a: 0 for a in desc.spec_attrs[eid]}
        hub.create_entity(desc.kinds[eid], eid, attrs)
    for p, c, attrs, rel in desc.edges:
        vals = {}
        for a in attrs:
            vals[a] = _role_token(p, c) if a == "role" else 0
        hub.connect(p, c, vals, relevance_flag=rel)


def _role_token(p: str, c: str) -> str:
    return f"r-{p}-{c}"


# -------------------------------------------------------------- rights oracle

class RightsDesc:
    """Plain description of a rights configuration over a GraphDesc."""

    def __init__(self, graph: GraphDesc):
        self.graph = graph
        self.channels: dict[str, dict] = {}   # entity -> {role_map, is_arbiter}
        self.adjustments: list[dict] = []     # accepted adjustments, in order
        self.delegations: list[dict] = []     # accepted delegations
        self.source_footprints: dict[str, list[str]] = {}

    def role_of(self, principal: str, entity: str):
        """Golden role token on the edge between them (build_hub_from wrote
        deterministic tokens)."""
        for p, c, attrs, _ in self.graph.edges:
            if {p, c} == {principal, entity} and "role" in attrs:
                return _role_token(p, c)
        return None

    def _match(self, datum: str, patterns) -> bool:
        from fnmatch import fnmatchcase

        return any(fnmatchcase(datum, pat) for pat in patterns)

    def _adjust(self, level: int, rows: list[dict]) -> int:
        grants = [r(a["level"]) for a in rows if a["kind"] == "Grant"]
        censors = [r(a["level"]) for a in rows if a["kind"] == "Censor"]
        if grants:
            level = max(level, max(grants))
        if censors:
            level = min(level, min(censors))
        return level

    def contribution(self, channel: str, principal: str, datum: str,
                     now_seq: int) -> int:
        if datum not in self.graph.collection(channel):
            return 0
        if principal not in self.graph.community(channel):
            return 0
        role = self.role_of(principal, channel)
        role_map = self.channels[channel]["role_map"]
        if role is None or role not in role_map:
            return 0
        level = r(role_map[role])
        rows = [a for a in self.adjustments
                if a["target"].get("type") == "channel"
                and a["target"]["id"] == channel
                and (a["target"].get("role") in (None, role))
                and (a["expiry"] is None or a["expiry"] > now_seq)
                and self._match(datum, a["scope"])]
        return self._adjust(level, rows)

    def resolve(self, principal: str, datum: str, now_seq: int) -> int:
        base = 0
        for channel in self.channels:
            base = max(base, self.contribution(channel, principal, datum, now_seq))
        for pat in self.source_footprints.get(principal, []):
            from fnmatch import fnmatchcase
            from re import sub

            if fnmatchcase(datum, sub(r"\{[^{}]+\}", "*", pat)):
                base = max(base, r("PROPOSE"))
        rows = [a for a in self.adjustments
                if a["target"].get("type") == "principal"
                and a["target"]["id"] == principal
                and (a["expiry"] is None or a["expiry"] > now_seq)
                and self._match(datum, a["scope"])]
        base = self._adjust(base, rows)
        for d in self.delegations:
            if d["to"] == principal and (d["expiry"] is None or d["expiry"] > now_seq) \
                    and self._match(datum, d["scope"]):
                base = max(base, r(d["level"]))
        return base

    def arbiter_of(self, datum: str):
        """None, a channel id, or 'MULTIPLE'."""
        concerned = [c for c in self.channels
                     if datum in self.graph.collection(c)]
        flagged = [c for c in concerned if self.channels[c]["is_arbiter"]]
        if len(flagged) > 1:
            return "MULTIPLE"
        if flagged:
            return flagged[0]
        anchor = datum.split(".", 1)[0].split("->", 1)[0]
        return anchor if anchor in concerned else None


# ------------------------------------------------------------ recount oracle

def recount_golden_from_log(hub) -> dict[str, list[dict]]:
    """Rebuild every datum's version history by scanning raw log records."""
    out: dict[str, list[dict]] = {}

    def commit(datum, version, by):
        out.setdefault(datum, []).append({"version": version, "by": by})

    proposals = {}
    for rec in hub.log.records():
        seq, kind, body = rec["seq"], rec["kind"], rec["body"]
        if kind == "entity":
            for a in sorted(body["attrs"]):
                commit(f"{body['id']}.{a}", 1, f"E{seq}")
        elif kind == "connect":
            for a in sorted(body["attrs"]):
                commit(f"{body['parent']}->{body['child']}.{a}", 1, f"C{seq}")
        elif kind == "proposal":
            proposals[f"P{seq}"] = body
        elif kind == "arbitration" and body["decision"] == "Accept":
            commit(proposals[body["proposal"]]["datum"], body["version"], f"A{seq}")
        elif kind == "derived":
            commit(body["datum"], body["version"], body["rule"])
        elif kind == "ingest_commit":
            commit(body["datum"], body["version"],
                   f"ingest:{body['source']}:{seq}")
        elif kind == "fed_commit":
            commit(body["datum"], body["version"],
                   f"federation:{body['contract']}:v{body['version']}")
    return out


def recount_rank_from_log(hub, min_sample: int) -> list[dict]:
    """Recompute the agreement ranking from raw log records plus the current
    graph (channel scopes evaluate against the live graph on both paths)."""
    proposals = {}
    state = {}
    for rec in hub.log.records():
        seq, kind, body = rec["seq"], rec["kind"], rec["body"]
        if kind == "proposal":
            proposals[f"P{seq}"] = body
            state[f"P{seq}"] = "open"
        elif kind == "arbitration":
            state[body["proposal"]] = "accepted" if body["decision"] == "Accept" \
                else "rejected"
        elif kind == "superseded":
            state[body["proposal"]] = "superseded"

    desc = GraphDesc()
    for eid, ent in hub.entities.items():
        desc.add_entity(eid, ent.kind.value, ent.attrs)
    for (p, c), conn in hub.connections.items():
        desc.add_edge(p, c, conn.attrs, conn.relevance_flag)

    counts: dict[tuple[str, str], dict] = {}
    for pid, body in proposals.items():
        arbitrated = state[pid] in ("accepted", "rejected")
        accepted = state[pid] == "accepted"
        subjects = []
        if body["author"] in hub.sources:
            subjects.append(("source", body["author"]))
        for ch in hub.channels:
            if body["datum"] in desc.collection(ch) and \
                    body["author"] in desc.community(ch):
                subjects.append(("channel", ch))
        for key in subjects:
            row = counts.setdefault(key, {"accepted": 0, "arbitrated": 0})
            if arbitrated:
                row["arbitrated"] += 1
            if accepted:
                row["accepted"] += 1
    rows = []
    for (kind, sid), row in counts.items():
        score = row["accepted"] / row["arbitrated"] \
            if row["arbitrated"] >= min_sample else None
        rows.append({"subject": sid, "kind": kind, "score": score,
                     "accepted": row["accepted"], "arbitrated": row["arbitrated"]})
    ranked = sorted((x for x in rows if x["score"] is not None),
                    key=lambda x: (-x["score"], -x["arbitrated"], x["subject"]))
    unranked = sorted((x for x in rows if x["score"] is None),
                      key=lambda x: x["subject"])
    return ranked + unranked
