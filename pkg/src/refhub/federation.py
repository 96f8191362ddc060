"""Contract-scoped synchronization between hub instances.

Each shared datum has exactly one owning instance; only the owner mints new
versions, and replicas adopt the owner's version numbers. A changeset carries
every owner-side golden commit past a watermark, ordered by commit seq, so a
replica receives every version with no gaps. Application is idempotent and
stale-proof: entries at or below the local version are skipped, so duplicated
or reordered changesets can never diverge state — the next in-order exchange
converges both sides, which the order-independent scope digest checks.

Proposals raised locally on a peer-owned datum become forward requests:
parked while the peer is unreachable, re-authored at the owner (original
author plus origin instance) once delivered, with the remote state mirrored
back on later syncs.
"""

from __future__ import annotations

import hashlib

from .errors import (
    AmbiguousOwnership,
    DuplicateContract,
    NotInScope,
    OwnershipViolation,
    PeerUnreachable,
    ScopeMismatch,
    UnknownContract,
    WrongPeer,
)
from .eventlog import canonical_json, parse_json
from .model import DatumRef, encode_value
from .rights import matches_scope

WIRE_MAGIC = "RHSYNC1"


# ----------------------------------------------------------------- ownership

def owner_of(hub, d: DatumRef):
    """Owning instance id of a datum under any contract, None if unshared."""
    for contract in hub.contracts.values():
        if not matches_scope(d, contract["scope"]):
            continue
        for pattern, owner in contract["ownership"]:
            if matches_scope(d, [pattern]):
                return owner
    return None


def establish_contract(hub, contract_id: str, peer: str, scope, ownership) -> dict:
    """ownership: mapping (or pair list) of datum pattern -> owning instance."""
    with hub._lock:
        if contract_id in hub.contracts:
            raise DuplicateContract(f"contract exists: {contract_id}")
        if peer == hub.instance_id:
            raise WrongPeer(f"cannot contract with self ({peer})")
        scope = list(scope)
        pairs = list(ownership.items()) if isinstance(ownership, dict) \
            else [tuple(p) for p in ownership]
        known = {hub.instance_id, peer}
        for pattern, owner in pairs:
            if owner not in known:
                raise AmbiguousOwnership(f"owner {owner!r} is neither side of "
                                         f"the contract")
        in_scope = [d for d in hub.goldens if matches_scope(d, scope)]
        for pattern in scope:
            if not any(matches_scope(d, [pattern]) for d in hub.goldens):
                raise ScopeMismatch(f"scope pattern matches nothing here: {pattern!r}")
        for d in in_scope:
            owners = {owner for pattern, owner in pairs if matches_scope(d, [pattern])}
            if len(owners) > 1:
                raise AmbiguousOwnership(f"{d} is owned by {sorted(owners)}")
            if not owners:
                raise AmbiguousOwnership(f"{d} is in scope but unowned")
        link = hub.links.get(peer)
        if link is not None:
            try:
                missing = link.check_scope(scope)
            except PeerUnreachable:
                missing = []
            if missing:
                raise ScopeMismatch(f"peer cannot resolve scope patterns: {missing}")
        hub._commit("contract", {"id": contract_id, "peer": peer, "scope": scope,
                                 "ownership": [list(p) for p in pairs],
                                 "at": hub.now()})
        return hub.contracts[contract_id]


def _contract(hub, contract_id: str) -> dict:
    contract = hub.contracts.get(contract_id)
    if contract is None:
        raise UnknownContract(f"unknown contract: {contract_id}")
    return contract


def check_scope(hub, patterns) -> list[str]:
    """Scope patterns that match nothing on this instance."""
    return [p for p in patterns
            if not any(matches_scope(d, [p]) for d in hub.goldens)]


# ----------------------------------------------------------------- changesets

_COMMIT_KINDS = ("entity", "connect", "arbitration", "derived", "ingest_commit")


def _commits_in(hub, rec: dict):
    """(datum, value, version, summary) golden commits inside one log record."""
    seq, kind, body = rec["seq"], rec["kind"], rec["body"]
    if kind == "entity":
        for name in sorted(body["attrs"]):
            yield (DatumRef.entity(body["id"], name), body["attrs"][name], 1,
                   {"kind": "creation", "seq": seq})
    elif kind == "connect":
        for name in sorted(body["attrs"]):
            yield (DatumRef.connection(body["parent"], body["child"], name),
                   body["attrs"][name], 1, {"kind": "creation", "seq": seq})
    elif kind == "arbitration" and body["decision"] == "Accept":
        yield (DatumRef.parse(hub.proposals[body["proposal"]]["datum"]),
               body["value"], body["version"],
               {"kind": "arbitration", "seq": seq, "author": body["arbiter"]})
    elif kind == "derived":
        yield (DatumRef.parse(body["datum"]), body["value"], body["version"],
               {"kind": "derived", "seq": seq, "rule": body["rule"]})
    elif kind == "ingest_commit":
        yield (DatumRef.parse(body["datum"]), body["value"], body["version"],
               {"kind": "ingested", "seq": seq, "source": body["source"]})


def emit_changeset(hub, contract_id: str, since: int) -> dict:
    """All owner-committed in-scope golden commits after `since`; re-emitting
    with the same watermark yields the identical changeset."""
    contract = _contract(hub, contract_id)
    entries = []
    high = since
    for rec in hub.log.records(since=since):
        if rec["kind"] not in _COMMIT_KINDS:
            continue
        for d, value, version, summary in _commits_in(hub, rec):
            if not matches_scope(d, contract["scope"]):
                continue
            if owner_of(hub, d) != hub.instance_id:
                continue
            entries.append({"datum": str(d), "value": value, "version": version,
                            "summary": summary})
            high = max(high, rec["seq"])
    return {"schema": 1, "contract": contract_id, "origin": hub.instance_id,
            "entries": entries, "high_seq": high}


def encode_changeset(cs: dict) -> bytes:
    payload = canonical_json(cs).encode("utf-8")
    return f"{WIRE_MAGIC} {len(payload)}\n".encode("ascii") + payload


def decode_changeset(wire: bytes) -> dict:
    head, _, rest = wire.partition(b"\n")
    parts = head.decode("ascii", "replace").split()
    if len(parts) != 2 or parts[0] != WIRE_MAGIC:
        raise WrongPeer("not a changeset frame")
    if int(parts[1]) != len(rest):
        raise WrongPeer(f"frame length {parts[1]} != payload {len(rest)}")
    return parse_json(rest.decode("utf-8"))


def apply_changeset(hub, contract_id: str, cs: dict) -> dict:
    with hub._lock:
        contract = _contract(hub, contract_id)
        if cs.get("contract") != contract_id or cs.get("origin") != contract["peer"]:
            raise WrongPeer(f"changeset from {cs.get('origin')!r} "
                            f"for {cs.get('contract')!r}")
        for entry in cs["entries"]:
            d = DatumRef.parse(entry["datum"])
            if owner_of(hub, d) == hub.instance_id:
                raise OwnershipViolation(f"peer sent an entry for self-owned {d}")
        applied = skipped = superseded = 0
        for entry in cs["entries"]:
            d = DatumRef.parse(entry["datum"])
            if d not in hub.goldens:
                skipped += 1
                continue
            local = hub.goldens[d][-1].version
            if entry["version"] <= local:
                skipped += 1
                continue
            open_pid = hub.open_proposal.get(d)
            hub._commit("fed_commit", {"contract": contract_id, "datum": entry["datum"],
                                       "value": entry["value"],
                                       "version": entry["version"],
                                       "origin": cs["origin"],
                                       "summary": entry["summary"], "at": hub.now()})
            applied += 1
            if open_pid is not None:
                hub._commit("superseded", {
                    "proposal": open_pid,
                    "by": f"{entry['datum']}@v{entry['version']}", "at": hub.now()})
                superseded += 1
        if cs["high_seq"] > hub.fed_received.get(contract_id, 0):
            hub._commit("fed_watermark", {"contract": contract_id,
                                          "upto": cs["high_seq"], "at": hub.now()})
        return {"applied": applied, "skipped": skipped, "superseded": superseded}


# ------------------------------------------------------------------- digests

def scope_digest(hub, contract_id: str) -> str:
    """Order-independent digest over (datum, value, owner version) in scope."""
    contract = _contract(hub, contract_id)
    rows = []
    for d in sorted(hub.goldens):
        if matches_scope(d, contract["scope"]):
            rec = hub.goldens[d][-1]
            rows.append([str(d), encode_value(rec.value), rec.version])
    return hashlib.sha256(canonical_json(rows).encode("utf-8")).hexdigest()


# ------------------------------------------------------------------ forwards

def contract_for(hub, d: DatumRef):
    for cid, contract in hub.contracts.items():
        if matches_scope(d, contract["scope"]):
            return cid
    return None


def create_forward(hub, d: DatumRef, author: str, value, rationale: str) -> str:
    """Record a proposal bound for the owning peer; send it now if reachable."""
    cid = contract_for(hub, d)
    val = hub.check_value(d, value)
    seq = hub._commit("forward", {"contract": cid, "datum": str(d), "author": author,
                                  "value": encode_value(val), "rationale": rationale,
                                  "at": hub.now()})
    fid = f"F{seq}"
    try:
        forward_proposal(hub, cid, fid)
    except PeerUnreachable:
        pass  # stays parked; retried by sync
    return fid


def forward_proposal(hub, contract_id: str, forward_id: str) -> str:
    """Deliver a parked forward to the owner; returns the remote proposal id."""
    with hub._lock:
        contract = _contract(hub, contract_id)
        fwd = hub.forwards.get(forward_id)
        if fwd is None or fwd["contract"] != contract_id:
            raise NotInScope(f"unknown forward {forward_id} on {contract_id}")
        d = DatumRef.parse(fwd["datum"])
        if not matches_scope(d, contract["scope"]):
            raise NotInScope(f"{d} is outside contract {contract_id}")
        if fwd["state"] == "Forwarded":
            return fwd["remote_id"]
        link = _link(hub, contract)
        remote_id = link.forward({"datum": fwd["datum"], "author": fwd["author"],
                                  "value": fwd["value"],
                                  "rationale": fwd["rationale"],
                                  "origin": hub.instance_id})
        hub._commit("forward_sent", {"id": forward_id, "remote_id": remote_id,
                                     "at": hub.now()})
        return remote_id


def receive_forward(hub, payload: dict) -> str:
    """Owner side of a forwarded proposal: re-authored, origin recorded."""
    from . import workflow

    with hub._lock:
        d = hub.resolve_datum(DatumRef.parse(payload["datum"]))
        from .model import decode_value

        return workflow.local_propose(hub, payload["author"], d,
                                      decode_value(payload["value"]),
                                      payload["rationale"],
                                      origin=payload["origin"])


# ---------------------------------------------------------------------- sync

def _link(hub, contract: dict):
    link = hub.links.get(contract["peer"])
    if link is None:
        raise PeerUnreachable(f"no link to {contract['peer']}")
    return link


def sync_once(hub, contract_id: str) -> dict:
    """One full exchange: pull the peer's changes, push ours, retry parked
    forwards, refresh forward states."""
    contract = _contract(hub, contract_id)
    link = _link(hub, contract)
    pulled = link.emit(contract_id, hub.fed_received.get(contract_id, 0))
    report_in = apply_changeset(hub, contract_id, decode_changeset(pulled))
    peer_mark = link.watermark(contract_id)
    cs = emit_changeset(hub, contract_id, peer_mark)
    report_out = link.apply(encode_changeset(cs))
    forwards = 0
    for fid in sorted(hub.forwards):
        fwd = hub.forwards[fid]
        if fwd["contract"] != contract_id:
            continue
        if fwd["state"] == "Parked":
            forward_proposal(hub, contract_id, fid)
            forwards += 1
        elif fwd["remote_id"]:
            state = link.proposal_state(fwd["remote_id"])
            if state and state != fwd["remote_state"]:
                hub._commit("forward_state", {"id": fid, "state": state,
                                              "at": hub.now()})
    return {"pulled": report_in, "pushed": report_out, "forwarded": forwards}


class InProcessLink:
    """Peer link for two hubs in one process; tests flip `partitioned`."""

    def __init__(self, peer_hub):
        self.peer = peer_hub
        self.partitioned = False

    def _check(self):
        if self.partitioned:
            raise PeerUnreachable("link is partitioned")

    def emit(self, contract_id: str, since: int) -> bytes:
        self._check()
        return encode_changeset(emit_changeset(self.peer, contract_id, since))

    def apply(self, wire: bytes) -> dict:
        self._check()
        cs = decode_changeset(wire)
        return apply_changeset(self.peer, cs["contract"], cs)

    def watermark(self, contract_id: str) -> int:
        self._check()
        return self.peer.fed_received.get(contract_id, 0)

    def forward(self, payload: dict) -> str:
        self._check()
        return receive_forward(self.peer, payload)

    def proposal_state(self, proposal_id: str):
        self._check()
        prop = self.peer.proposals.get(proposal_id)
        return prop["state"] if prop else None

    def check_scope(self, patterns) -> list[str]:
        self._check()
        return check_scope(self.peer, patterns)


class HttpLink:
    """Peer link over the service API."""

    def __init__(self, base_url: str, client=None):
        import httpx

        self.base_url = base_url.rstrip("/")
        self.client = client or httpx.Client(timeout=10.0)

    def _post(self, path: str, **kwargs):
        import httpx

        try:
            resp = self.client.post(self.base_url + path, **kwargs)
        except httpx.HTTPError as exc:
            raise PeerUnreachable(str(exc)) from exc
        if resp.status_code >= 500:
            raise PeerUnreachable(f"peer error {resp.status_code}")
        return resp

    def _get(self, path: str):
        import httpx

        try:
            resp = self.client.get(self.base_url + path)
        except httpx.HTTPError as exc:
            raise PeerUnreachable(str(exc)) from exc
        return resp

    def emit(self, contract_id: str, since: int) -> bytes:
        resp = self._post("/sync/emit", json={"contract": contract_id,
                                              "since": since})
        return resp.content

    def apply(self, wire: bytes) -> dict:
        return self._post("/sync/apply", content=wire,
                          headers={"content-type": "application/octet-stream"}).json()

    def watermark(self, contract_id: str) -> int:
        return self._get(f"/sync/watermark/{contract_id}").json()["upto"]

    def forward(self, payload: dict) -> str:
        return self._post("/sync/forward", json=payload).json()["proposal"]

    def proposal_state(self, proposal_id: str):
        resp = self._get(f"/proposals/{proposal_id}")
        return resp.json().get("state") if resp.status_code == 200 else None

    def check_scope(self, patterns) -> list[str]:
        return self._post("/sync/check-scope", json={"scope": list(patterns)}).json()["missing"]
