"""The hub: single owner of golden-record state, fed by an append-only log.

Every mutation is validated against current state, appended to the log as one
record, then applied. Replaying the log from seq 1 rebuilds the exact same
state (replay applies records without re-validation; they were valid when
written). Wall-clock timestamps are stored in record bodies but never decide
anything.

Record ids are derived from the log seq (``P7`` = proposal committed at
seq 7), so ids are replay-stable. ``committed_by`` on a golden record names
the committing act and encodes the cause:

  E*/C*          creation-time version 1
  A*             accepted arbitration
  <rule id>      propagation-derived commit
  federation:*   replicated from the owning instance
  ingest:*       direct commit by an arbitrate-elevated source
"""

from __future__ import annotations

import hashlib
import threading
import time
from decimal import Decimal
from typing import Optional

from . import visibility
from .errors import (
    DuplicateEdge,
    DuplicateId,
    InvalidValue,
    SelfLoop,
    SnapshotStale,
    UnknownAuthor,
    UnknownDatum,
    UnknownEntity,
    UnknownIntervention,
    UnknownKind,
)
from .eventlog import EventLog, canonical_json, parse_json
from .model import (
    Connection,
    DatumRef,
    Entity,
    EntityKind,
    GoldenRecord,
    Reliability,
    Value,
    check_id,
    coerce_value,
    decode_value,
    encode_value,
    value_tag,
)

SCHEMA = "refhub/1"


class Hub:
    """One governance-hub instance. All public mutators serialize on a lock."""

    def __init__(self, instance_id: str = "hub", log_path: Optional[str] = None,
                 min_sample: int = 3, warn_rate: int = 30):
        self.instance_id = instance_id
        self.min_sample = min_sample
        self.warn_rate = warn_rate  # warnings per session per minute
        self.log = EventLog(log_path)
        self._lock = threading.RLock()
        self._reset_state()
        # non-persisted runtime attachments
        self.links: dict = {}            # peer instance id -> PeerLink
        self._warn_buckets: dict = {}    # session token -> [timestamps]
        self._sessions: dict = {}        # session token -> principal id
        if self.log.last_seq:
            self._replay(since=0)

    # ------------------------------------------------------------------ state

    def _reset_state(self) -> None:
        self.entities: dict[str, Entity] = {}
        self.connections: dict[tuple[str, str], Connection] = {}
        self.parents: dict[str, set[str]] = {}
        self.children: dict[str, set[str]] = {}
        self.goldens: dict[DatumRef, list[GoldenRecord]] = {}
        self.datum_tag: dict[DatumRef, str] = {}
        self.attr_names: set[str] = set()
        self.trail: dict[DatumRef, list[dict]] = {}
        # workflow
        self.proposals: dict[str, dict] = {}
        self.open_proposal: dict[DatumRef, str] = {}
        self.opinions: dict[str, dict] = {}
        self.arbitrations: dict[str, dict] = {}
        self.warnings: dict[str, dict] = {}
        self.open_warnings: dict[DatumRef, list[str]] = {}
        self.rejected: dict[DatumRef, set[str]] = {}
        # rights
        self.channels: dict[str, dict] = {}
        self.adjustments: list[dict] = []
        self.delegations: list[dict] = []
        # propagation / exosource / federation
        self.rules: dict[str, dict] = {}
        self.rule_priorities: dict[int, str] = {}
        self.sources: dict[str, dict] = {}
        self.contracts: dict[str, dict] = {}
        self.forwards: dict[str, dict] = {}
        self.fed_received: dict[str, int] = {}

    # ------------------------------------------------------------- log plumbing

    def _commit(self, kind: str, body: dict) -> int:
        """Append one record and apply it. Callers hold the lock."""
        seq = self.log.append(kind, body)
        self._apply(seq, kind, body)
        return seq

    def _replay(self, since: int) -> None:
        for rec in self.log.records(since=since):
            self._apply(rec["seq"], rec["kind"], rec["body"])

    def _apply(self, seq: int, kind: str, body: dict) -> None:
        getattr(self, f"_apply_{kind}")(seq, body)

    @staticmethod
    def now() -> str:
        # wall clock, stored for humans only; a string so that live state and
        # replayed state agree byte for byte
        return format(time.time(), ".6f")

    # ------------------------------------------------------------- graph ops

    def create_entity(self, kind, entity_id: str, attrs: Optional[dict] = None) -> Entity:
        with self._lock:
            check_id(entity_id, "entity id")
            try:
                ekind = EntityKind(kind)
            except ValueError:
                raise UnknownKind(f"unknown entity kind: {kind!r}")
            if entity_id in self.entities:
                raise DuplicateId(f"entity exists: {entity_id}")
            enc = self._encode_attrs(attrs or {})
            self._commit("entity", {"id": entity_id, "kind": ekind.value,
                                    "attrs": enc, "at": self.now()})
            return self.entities[entity_id]

    def connect(self, parent: str, child: str, attrs: Optional[dict] = None,
                relevance_flag: bool = False) -> Connection:
        with self._lock:
            for eid in (parent, child):
                if eid not in self.entities:
                    raise UnknownEntity(f"unknown entity: {eid}")
            if parent == child:
                raise SelfLoop(f"self loop on {parent}")
            if (parent, child) in self.connections:
                raise DuplicateEdge(f"edge exists: {parent}->{child}")
            enc = self._encode_attrs(attrs or {})
            self._commit("connect", {"parent": parent, "child": child, "attrs": enc,
                                     "relevance": bool(relevance_flag), "at": self.now()})
            return self.connections[(parent, child)]

    def _encode_attrs(self, attrs: dict) -> dict:
        enc = {}
        for name, value in attrs.items():
            check_id(name, "attribute name")
            enc[name] = encode_value(coerce_value(value))
        return enc

    def resolve_datum(self, datum) -> DatumRef:
        """Parse and resolve a datum reference; raise UnknownDatum otherwise."""
        d = DatumRef.parse(datum) if isinstance(datum, str) else datum
        if d not in self.goldens:
            raise UnknownDatum(f"unknown datum: {d}")
        return d

    def read_golden(self, datum) -> GoldenRecord:
        d = self.resolve_datum(datum)
        rec = self.goldens[d][-1]
        eff = self.effective_reliability(d)
        if eff is rec.reliability:
            return rec
        return GoldenRecord(rec.datum, rec.value, rec.version, eff,
                            rec.committed_by, rec.committed_at, rec.seq)

    def golden_history(self, datum) -> list[GoldenRecord]:
        return list(self.goldens[self.resolve_datum(datum)])

    def effective_reliability(self, d: DatumRef) -> Reliability:
        if self.open_warnings.get(d):
            return Reliability.CONTESTED
        if d in self.open_proposal:
            return Reliability.PROPOSED
        return self.goldens[d][-1].reliability

    def audit_trail(self, datum) -> list[dict]:
        """Everything that happened to one datum, in log order.

        Authored acts carry their author and rationale; warnings carry none.
        Entries that committed a golden version carry that version, so the
        trail reconstructs the full version history.
        """
        d = self.resolve_datum(datum)
        return [dict(e) for e in self.trail.get(d, [])]

    # datum_history is the reference-graph view of the same merged timeline
    datum_history = audit_trail

    def append_intervention(self, kind: str, **kwargs) -> int:
        """Low-level entry: validates author/datum, routes to the workflow op,
        and returns the committed record's log seq."""
        from . import workflow

        with self._lock:
            if kind == "Proposal":
                datum = kwargs["datum"]
                self.resolve_datum(datum)
                author = kwargs["author"]
                if author not in self.entities:
                    raise UnknownAuthor(f"unknown author: {author}")
                pid = workflow.propose(self, author, datum, kwargs["value"],
                                       kwargs.get("rationale", ""))
                return self.proposals[pid]["seq"] if pid in self.proposals \
                    else self.forwards[pid]["seq"]
            if kind == "Opinion":
                oid = workflow.opine(self, kwargs["author"], kwargs["proposal"],
                                     kwargs["verdict"], kwargs.get("rationale", ""))
                return self.opinions[oid]["seq"]
            if kind == "Arbitration":
                aid = workflow.arbitrate(self, kwargs["author"], kwargs["proposal"],
                                         kwargs["decision"], kwargs.get("rationale", ""))
                return self.arbitrations[aid]["seq"]
            raise UnknownKind(f"unknown intervention kind: {kind!r}")

    def find_intervention(self, record_id: str) -> DatumRef:
        """Datum of an intervention (or warning) record id."""
        for pool in (self.proposals, self.arbitrations, self.opinions, self.warnings):
            if record_id in pool:
                rec = pool[record_id]
                datum = rec["datum"] if "datum" in rec else \
                    self.proposals[rec["proposal"]]["datum"]
                return DatumRef.parse(datum)
        raise UnknownIntervention(f"unknown intervention: {record_id}")

    # ----------------------------------------------------------- derivations

    def community_of(self, entity_id: str) -> list[str]:
        return visibility.community_of(self, entity_id)

    def collection_of(self, entity_id: str) -> list[DatumRef]:
        return visibility.collection_of(self, entity_id)

    def field_of_action(self, individual_id: str) -> list[DatumRef]:
        return visibility.field_of_action(self, individual_id)

    def area_of_visibility(self, intervention_id: str) -> list[str]:
        return visibility.area_of_visibility(self, intervention_id)

    # ------------------------------------------------ delegating op surfaces

    def configure_channel(self, entity_id, role_map, is_arbiter=False,
                          mobilized_level=4, grant_rules=(), censor_rules=()):
        from . import rights
        return rights.configure_channel(self, entity_id, role_map, is_arbiter,
                                        mobilized_level, grant_rules, censor_rules)

    def resolve_rights(self, principal: str, datum):
        from . import rights
        return rights.resolve_rights(self, principal, datum)

    def arbiter_channel(self, datum) -> str:
        from . import rights
        return rights.arbiter_channel(self, datum)

    def apply_adjustment(self, *a, **kw):
        from . import rights
        return rights.apply_adjustment(self, *a, **kw)

    def delegate(self, *a, **kw):
        from . import rights
        return rights.delegate(self, *a, **kw)

    def effective_rights(self, principal: str) -> list[dict]:
        from . import rights
        return rights.effective_rights(self, principal)

    def warn(self, datum, note: str, caller: str, session: Optional[str] = None) -> str:
        from . import workflow
        return workflow.warn(self, datum, note, caller, session)

    def propose(self, author: str, datum, value, rationale: str = "") -> str:
        from . import workflow
        return workflow.propose(self, author, datum, value, rationale)

    def opine(self, evaluator: str, proposal_id: str, verdict: str, rationale: str) -> str:
        from . import workflow
        return workflow.opine(self, evaluator, proposal_id, verdict, rationale)

    def arbitrate(self, arbiter: str, proposal_id: str, decision: str,
                  rationale: str = "") -> str:
        from . import workflow
        return workflow.arbitrate(self, arbiter, proposal_id, decision, rationale)

    def review_queue(self, principal: str) -> list[dict]:
        from . import workflow
        return workflow.review_queue(self, principal)

    def register_rule(self, **kw) -> str:
        from . import propagation
        return propagation.register_rule(self, **kw)

    def propagate(self, datum) -> list[dict]:
        from . import propagation
        return propagation.propagate(self, datum)

    def register_source(self, entity_id: str, mappings, version: int = 1) -> str:
        from . import exosource
        return exosource.register_source(self, entity_id, mappings, version)

    def ingest(self, source: str, records) -> dict:
        from . import exosource
        return exosource.ingest(self, source, records)

    def rank(self, scope=None) -> list[dict]:
        from . import exosource
        return exosource.rank(self, scope)

    def establish_contract(self, contract_id, peer, scope, ownership):
        from . import federation
        return federation.establish_contract(self, contract_id, peer, scope, ownership)

    def emit_changeset(self, contract_id: str, since: int) -> dict:
        from . import federation
        return federation.emit_changeset(self, contract_id, since)

    def apply_changeset(self, contract_id: str, changeset: dict) -> dict:
        from . import federation
        return federation.apply_changeset(self, contract_id, changeset)

    def forward_proposal(self, contract_id: str, forward_id: str) -> str:
        from . import federation
        return federation.forward_proposal(self, contract_id, forward_id)

    def scope_digest(self, contract_id: str) -> str:
        from . import federation
        return federation.scope_digest(self, contract_id)

    def sync_once(self, contract_id: str) -> dict:
        from . import federation
        return federation.sync_once(self, contract_id)

    # ---------------------------------------------------------------- sessions

    def open_session(self, principal: str) -> str:
        import secrets

        if principal not in self.entities:
            raise UnknownAuthor(f"unknown principal: {principal}")
        token = secrets.token_hex(16)
        self._sessions[token] = principal
        return token

    def session_principal(self, token: str) -> Optional[str]:
        return self._sessions.get(token)

    # ------------------------------------------------------------- golden I/O

    def _commit_golden(self, seq: int, d: DatumRef, value: Value, version: int,
                       reliability: Reliability, committed_by: str, at: float) -> None:
        self.goldens.setdefault(d, []).append(
            GoldenRecord(d, value, version, reliability, committed_by, at, seq))

    def next_version(self, d: DatumRef) -> int:
        return self.goldens[d][-1].version + 1 if d in self.goldens else 1

    def check_value(self, d: DatumRef, value) -> Value:
        v = coerce_value(value)
        tag = value_tag(v)
        want = self.datum_tag[d]
        if tag != want:
            if want == "decimal" and tag == "integer":
                return Decimal(v)
            raise InvalidValue(f"{d} holds {want}, got {tag}")
        return v

    def _trail_add(self, d: DatumRef, entry: dict) -> None:
        self.trail.setdefault(d, []).append(entry)

    # ---------------------------------------------------------------- appliers

    def _apply_entity(self, seq: int, body: dict) -> None:
        eid = body["id"]
        attrs = sorted(body["attrs"])
        self.entities[eid] = Entity(eid, EntityKind(body["kind"]), attrs, seq)
        self.parents.setdefault(eid, set())
        self.children.setdefault(eid, set())
        rid = f"E{seq}"
        for name in attrs:
            d = DatumRef.entity(eid, name)
            enc = body["attrs"][name]
            self.datum_tag[d] = enc["t"]
            self.attr_names.add(name)
            self._commit_golden(seq, d, decode_value(enc), 1,
                                Reliability.UNVERIFIED, rid, body["at"])
            self._trail_add(d, {"seq": seq, "kind": "creation", "version": 1,
                                "value": enc})

    def _apply_connect(self, seq: int, body: dict) -> None:
        p, c = body["parent"], body["child"]
        attrs = sorted(body["attrs"])
        self.connections[(p, c)] = Connection(p, c, attrs, body["relevance"], seq)
        self.children[p].add(c)
        self.parents[c].add(p)
        rid = f"C{seq}"
        for name in attrs:
            d = DatumRef.connection(p, c, name)
            enc = body["attrs"][name]
            self.datum_tag[d] = enc["t"]
            self.attr_names.add(name)
            self._commit_golden(seq, d, decode_value(enc), 1,
                                Reliability.UNVERIFIED, rid, body["at"])
            self._trail_add(d, {"seq": seq, "kind": "creation", "version": 1,
                                "value": enc})

    def _apply_channel(self, seq: int, body: dict) -> None:
        self.channels[body["entity"]] = {
            "entity": body["entity"], "role_map": dict(body["role_map"]),
            "is_arbiter": body["is_arbiter"],
            "mobilized_level": body["mobilized_level"], "seq": seq,
        }

    def _apply_warning(self, seq: int, body: dict) -> None:
        wid = f"W{seq}"
        d = DatumRef.parse(body["datum"])
        self.warnings[wid] = {"id": wid, "datum": body["datum"], "note": body["note"],
                              "at": body["at"], "seq": seq, "resolved_by": None}
        self.open_warnings.setdefault(d, []).append(wid)
        self._trail_add(d, {"seq": seq, "kind": "warning", "id": wid,
                            "note": body["note"]})

    def _apply_proposal(self, seq: int, body: dict) -> None:
        pid = f"P{seq}"
        d = DatumRef.parse(body["datum"])
        repeat = canonical_json(body["value"]) in self.rejected.get(d, set())
        self.proposals[pid] = {
            "id": pid, "datum": body["datum"], "author": body["author"],
            "value": body["value"], "rationale": body["rationale"],
            "state": "UnderReview", "evaluators": list(body["evaluators"]),
            "arbiter": body["arbiter"], "origin": body.get("origin"),
            "at": body["at"], "seq": seq, "repeats_rejected": repeat,
        }
        self.open_proposal[d] = pid
        entry = {"seq": seq, "kind": "proposal", "id": pid, "author": body["author"],
                 "value": body["value"], "rationale": body["rationale"]}
        if body.get("origin"):
            entry["origin"] = body["origin"]
        if repeat:
            entry["repeats_rejected"] = True
        self._trail_add(d, entry)

    def _apply_opinion(self, seq: int, body: dict) -> None:
        oid = f"O{seq}"
        prop = self.proposals[body["proposal"]]
        d = DatumRef.parse(prop["datum"])
        self.opinions[oid] = {"id": oid, "proposal": body["proposal"],
                              "author": body["evaluator"], "verdict": body["verdict"],
                              "rationale": body["rationale"], "at": body["at"],
                              "seq": seq, "datum": prop["datum"]}
        self._trail_add(d, {"seq": seq, "kind": "opinion", "id": oid,
                            "author": body["evaluator"], "verdict": body["verdict"],
                            "rationale": body["rationale"]})

    def _apply_arbitration(self, seq: int, body: dict) -> None:
        aid = f"A{seq}"
        prop = self.proposals[body["proposal"]]
        d = DatumRef.parse(prop["datum"])
        accept = body["decision"] == "Accept"
        self.arbitrations[aid] = {"id": aid, "proposal": body["proposal"],
                                  "author": body["arbiter"], "decision": body["decision"],
                                  "rationale": body["rationale"], "at": body["at"],
                                  "seq": seq, "datum": prop["datum"]}
        prop["state"] = "Accepted" if accept else "Rejected"
        prop["arbitration"] = aid
        self.open_proposal.pop(d, None)
        for wid in self.open_warnings.pop(d, []):
            self.warnings[wid]["resolved_by"] = aid
        entry = {"seq": seq, "kind": "arbitration", "id": aid,
                 "author": body["arbiter"], "decision": body["decision"],
                 "rationale": body["rationale"]}
        if accept:
            self._commit_golden(seq, d, decode_value(body["value"]), body["version"],
                                Reliability.GOLDEN, aid, body["at"])
            entry["version"] = body["version"]
            entry["value"] = body["value"]
        else:
            self.rejected.setdefault(d, set()).add(canonical_json(prop["value"]))
        self._trail_add(d, entry)

    def _apply_derived(self, seq: int, body: dict) -> None:
        d = DatumRef.parse(body["datum"])
        self._commit_golden(seq, d, decode_value(body["value"]), body["version"],
                            Reliability.GOLDEN, body["rule"], body["at"])
        self._trail_add(d, {"seq": seq, "kind": "derived", "rule": body["rule"],
                            "version": body["version"], "value": body["value"],
                            "seed_seq": body["seed_seq"]})

    def _apply_adjustment(self, seq: int, body: dict) -> None:
        jid = f"J{seq}"
        self.adjustments.append({"id": jid, "kind": body["kind"],
                                 "issuer": body["issuer"], "target": dict(body["target"]),
                                 "scope": list(body["scope"]), "level": body["level"],
                                 "expiry": body["expiry"], "at": body["at"], "seq": seq})

    def _apply_delegation(self, seq: int, body: dict) -> None:
        did = f"D{seq}"
        self.delegations.append({"id": did, "from": body["from"], "to": body["to"],
                                 "level": body["level"], "scope": list(body["scope"]),
                                 "expiry": body["expiry"], "at": body["at"], "seq": seq})

    def _apply_rule(self, seq: int, body: dict) -> None:
        rule = dict(body)
        rule.pop("at", None)
        rule["seq"] = seq
        self.rules[body["id"]] = rule
        self.rule_priorities[body["priority"]] = body["id"]

    def _apply_source(self, seq: int, body: dict) -> None:
        self.sources[body["entity"]] = {"entity": body["entity"],
                                        "mappings": [dict(m) for m in body["mappings"]],
                                        "version": body["version"], "seq": seq}

    def _apply_ingest_commit(self, seq: int, body: dict) -> None:
        d = DatumRef.parse(body["datum"])
        by = f"ingest:{body['source']}:{seq}"
        self._commit_golden(seq, d, decode_value(body["value"]), body["version"],
                            Reliability.GOLDEN, by, body["at"])
        for wid in self.open_warnings.pop(d, []):
            self.warnings[wid]["resolved_by"] = by
        self._trail_add(d, {"seq": seq, "kind": "ingested", "source": body["source"],
                            "version": body["version"], "value": body["value"]})

    def _apply_contract(self, seq: int, body: dict) -> None:
        self.contracts[body["id"]] = {"id": body["id"], "peer": body["peer"],
                                      "scope": list(body["scope"]),
                                      "ownership": [list(o) for o in body["ownership"]],
                                      "seq": seq}
        self.fed_received.setdefault(body["id"], 0)

    def _apply_fed_commit(self, seq: int, body: dict) -> None:
        d = DatumRef.parse(body["datum"])
        by = f"federation:{body['contract']}:v{body['version']}"
        self._commit_golden(seq, d, decode_value(body["value"]), body["version"],
                            Reliability.GOLDEN, by, body["at"])
        for wid in self.open_warnings.pop(d, []):
            self.warnings[wid]["resolved_by"] = by
        self._trail_add(d, {"seq": seq, "kind": "federated", "origin": body["origin"],
                            "contract": body["contract"], "version": body["version"],
                            "value": body["value"], "summary": body["summary"]})

    def _apply_superseded(self, seq: int, body: dict) -> None:
        prop = self.proposals[body["proposal"]]
        prop["state"] = "Superseded"
        d = DatumRef.parse(prop["datum"])
        if self.open_proposal.get(d) == body["proposal"]:
            del self.open_proposal[d]
        self._trail_add(d, {"seq": seq, "kind": "superseded",
                            "proposal": body["proposal"], "by": body["by"]})

    def _apply_fed_watermark(self, seq: int, body: dict) -> None:
        cur = self.fed_received.get(body["contract"], 0)
        self.fed_received[body["contract"]] = max(cur, body["upto"])

    def _apply_forward(self, seq: int, body: dict) -> None:
        fid = f"F{seq}"
        self.forwards[fid] = {"id": fid, "contract": body["contract"],
                              "datum": body["datum"], "author": body["author"],
                              "value": body["value"], "rationale": body["rationale"],
                              "state": "Parked", "remote_id": None,
                              "remote_state": None, "at": body["at"], "seq": seq}

    def _apply_forward_sent(self, seq: int, body: dict) -> None:
        fwd = self.forwards[body["id"]]
        fwd["state"] = "Forwarded"
        fwd["remote_id"] = body["remote_id"]
        fwd["remote_state"] = "UnderReview"

    def _apply_forward_state(self, seq: int, body: dict) -> None:
        self.forwards[body["id"]]["remote_state"] = body["state"]

    # --------------------------------------------------------- snapshot / digest

    def state_to_json(self) -> dict:
        def enc_adj(rows):
            return [dict(r) for r in rows]

        return {
            "instance": self.instance_id,
            "seq": self.log.last_seq,
            "entities": {e.id: {"kind": e.kind.value, "attrs": e.attrs,
                                "created_seq": e.created_seq}
                         for e in self.entities.values()},
            "connections": [{"parent": c.parent, "child": c.child, "attrs": c.attrs,
                             "relevance": c.relevance_flag, "created_seq": c.created_seq}
                            for _, c in sorted(self.connections.items())],
            "goldens": {str(d): [r.to_json() for r in recs]
                        for d, recs in sorted(self.goldens.items())},
            "datum_tag": {str(d): t for d, t in sorted(self.datum_tag.items())},
            "attr_names": sorted(self.attr_names),
            "trail": {str(d): entries for d, entries in sorted(self.trail.items())},
            "proposals": self.proposals,
            "open_proposal": {str(d): pid for d, pid in sorted(self.open_proposal.items())},
            "opinions": self.opinions,
            "arbitrations": self.arbitrations,
            "warnings": self.warnings,
            "open_warnings": {str(d): ids for d, ids in sorted(self.open_warnings.items())
                              if ids},
            "rejected": {str(d): sorted(vals) for d, vals in sorted(self.rejected.items())
                         if vals},
            "channels": self.channels,
            "adjustments": enc_adj(self.adjustments),
            "delegations": enc_adj(self.delegations),
            "rules": self.rules,
            "rule_priorities": {str(k): v for k, v in sorted(self.rule_priorities.items())},
            "sources": self.sources,
            "contracts": self.contracts,
            "forwards": self.forwards,
            "fed_received": self.fed_received,
        }

    def state_from_json(self, state: dict) -> None:
        self._reset_state()
        for eid, e in state["entities"].items():
            self.entities[eid] = Entity(eid, EntityKind(e["kind"]), list(e["attrs"]),
                                        e["created_seq"])
            self.parents.setdefault(eid, set())
            self.children.setdefault(eid, set())
        for c in state["connections"]:
            conn = Connection(c["parent"], c["child"], list(c["attrs"]),
                              c["relevance"], c["created_seq"])
            self.connections[(conn.parent, conn.child)] = conn
            self.children[conn.parent].add(conn.child)
            self.parents[conn.child].add(conn.parent)
        for ds, recs in state["goldens"].items():
            d = DatumRef.parse(ds)
            self.goldens[d] = [GoldenRecord(d, decode_value(r["value"]), r["version"],
                                            Reliability(r["reliability"]),
                                            r["committed_by"], r["committed_at"],
                                            r["seq"]) for r in recs]
        self.datum_tag = {DatumRef.parse(k): v for k, v in state["datum_tag"].items()}
        self.attr_names = set(state["attr_names"])
        self.trail = {DatumRef.parse(k): [dict(e) for e in v]
                      for k, v in state["trail"].items()}
        self.proposals = {k: dict(v) for k, v in state["proposals"].items()}
        self.open_proposal = {DatumRef.parse(k): v
                              for k, v in state["open_proposal"].items()}
        self.opinions = {k: dict(v) for k, v in state["opinions"].items()}
        self.arbitrations = {k: dict(v) for k, v in state["arbitrations"].items()}
        self.warnings = {k: dict(v) for k, v in state["warnings"].items()}
        self.open_warnings = {DatumRef.parse(k): list(v)
                              for k, v in state["open_warnings"].items()}
        self.rejected = {DatumRef.parse(k): set(v) for k, v in state["rejected"].items()}
        self.channels = {k: dict(v) for k, v in state["channels"].items()}
        self.adjustments = [dict(r) for r in state["adjustments"]]
        self.delegations = [dict(r) for r in state["delegations"]]
        self.rules = {k: dict(v) for k, v in state["rules"].items()}
        self.rule_priorities = {int(k): v for k, v in state["rule_priorities"].items()}
        self.sources = {k: dict(v) for k, v in state["sources"].items()}
        self.contracts = {k: dict(v) for k, v in state["contracts"].items()}
        self.forwards = {k: dict(v) for k, v in state["forwards"].items()}
        self.fed_received = dict(state["fed_received"])

    def state_digest(self) -> str:
        return hashlib.sha256(
            canonical_json(self.state_to_json()).encode("utf-8")).hexdigest()

    def snapshot(self, path: str) -> dict:
        with self._lock:
            seq = self.log.last_seq
            doc = {"schema": SCHEMA, "instance": self.instance_id, "seq": seq,
                   "prefix_hash": self.log.prefix_hash(seq),
                   "state": self.state_to_json()}
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(canonical_json(doc))
            return {"seq": seq, "path": path}

    @classmethod
    def restore(cls, snapshot_path: str, log_path: Optional[str] = None,
                **kwargs) -> "Hub":
        """Load a snapshot, then replay the log tail past the snapshot seq."""
        with open(snapshot_path, encoding="utf-8") as fh:
            doc = parse_json(fh.read())
        hub = cls.__new__(cls)
        hub.instance_id = doc["instance"]
        hub.min_sample = kwargs.get("min_sample", 3)
        hub.warn_rate = kwargs.get("warn_rate", 30)
        hub.log = EventLog(log_path)
        hub._lock = threading.RLock()
        hub.links = {}
        hub._warn_buckets = {}
        hub._sessions = {}
        snap_seq = doc["seq"]
        if hub.log.start_seq > snap_seq + 1:
            raise SnapshotStale(
                f"snapshot at seq {snap_seq} predates log start {hub.log.start_seq}")
        if hub.log.start_seq == 1 and hub.log.last_seq >= snap_seq:
            if hub.log.prefix_hash(snap_seq) != doc["prefix_hash"]:
                raise SnapshotStale("snapshot does not match this log's history")
        hub.state_from_json(doc["state"])
        hub._replay(since=snap_seq)
        return hub
