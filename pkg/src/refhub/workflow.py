"""Control-channel workflow: warn, propose, opine, arbitrate.

Warnings are structurally author-free: the caller's identity is used for the
rights check and rate limiting, then dropped — the logged record and every
reachable view of it carry no principal. Proposals, opinions, and arbitrations
are always fully attributed.

One proposal may be open per datum at a time; an accepted arbitration is the
only workflow path that commits a new golden version (propagation-derived
commits follow inside the same write).
"""

from __future__ import annotations

import time

from . import propagation, rights
from .errors import (
    DuplicateOpinion,
    InsufficientRights,
    MissingRationale,
    NotArbiter,
    NotUnderReview,
    OwnershipViolation,
    ProposalInFlight,
    RateLimited,
    SelfReview,
    UnknownAuthor,
    UnknownKind,
    UnknownProposal,
)
from .model import DatumRef, encode_value

VERDICTS = ("Support", "Object")
DECISIONS = ("Accept", "Reject")


def _require_author(hub, author: str) -> None:
    if author not in hub.entities:
        raise UnknownAuthor(f"unknown author: {author}")


def warn(hub, datum, note: str, caller: str, session=None) -> str:
    with hub._lock:
        d = hub.resolve_datum(datum)
        rights._require_principal(hub, caller)
        if rights.resolve_rights(hub, caller, d) < rights.Right.WARN:
            raise InsufficientRights(f"caller holds less than WARN on {d}")
        if session is not None:
            _rate_limit(hub, session)
        # identity checked, now discarded: the record carries only the datum
        seq = hub._commit("warning", {"datum": str(d), "note": note,
                                      "at": hub.now()})
        return f"W{seq}"


def _rate_limit(hub, session: str) -> None:
    now = time.monotonic()
    window = [t for t in hub._warn_buckets.get(session, []) if now - t < 60.0]
    if len(window) >= hub.warn_rate:
        raise RateLimited("warning rate exceeded for this session")
    window.append(now)
    hub._warn_buckets[session] = window


def propose(hub, author: str, datum, value, rationale: str = "") -> str:
    """Open a proposal; on a peer-owned datum, records a forward request for
    the owning instance instead (returns the local forward id)."""
    from . import federation

    with hub._lock:
        d = hub.resolve_datum(datum)
        _require_author(hub, author)
        rights._require_principal(hub, author)
        owner = federation.owner_of(hub, d)
        if owner is not None and owner != hub.instance_id:
            return federation.create_forward(hub, d, author, value, rationale)
        return local_propose(hub, author, d, value, rationale)


def local_propose(hub, author: str, d: DatumRef, value, rationale: str,
                  origin: str | None = None) -> str:
    if rights.resolve_rights(hub, author, d) < rights.Right.PROPOSE:
        raise InsufficientRights(f"{author} holds less than PROPOSE on {d}")
    if d in hub.open_proposal:
        raise ProposalInFlight(f"open proposal on {d}: {hub.open_proposal[d]}")
    val = hub.check_value(d, value)
    try:
        arbiter = rights.arbiter_channel(hub, d)
    except Exception:
        arbiter = None
    evaluators = rights.mobilized_evaluators(hub, d, exclude=author)
    seq = hub._commit("proposal", {
        "datum": str(d), "author": author, "value": encode_value(val),
        "rationale": rationale, "evaluators": evaluators, "arbiter": arbiter,
        "origin": origin, "at": hub.now()})
    return f"P{seq}"


def opine(hub, evaluator: str, proposal_id: str, verdict: str, rationale: str) -> str:
    with hub._lock:
        prop = hub.proposals.get(proposal_id)
        if prop is None:
            raise UnknownProposal(f"unknown proposal: {proposal_id}")
        if prop["state"] != "UnderReview":
            raise NotUnderReview(f"proposal {proposal_id} is {prop['state']}")
        rights._require_principal(hub, evaluator)
        if evaluator == prop["author"]:
            raise SelfReview("authors do not review their own proposals")
        if verdict not in VERDICTS:
            raise UnknownKind(f"verdict must be one of {VERDICTS}")
        if not rationale or not rationale.strip():
            raise MissingRationale("opinions must be reasoned")
        d = DatumRef.parse(prop["datum"])
        if rights.resolve_rights(hub, evaluator, d) < rights.Right.EVALUATE:
            raise InsufficientRights(f"{evaluator} holds less than EVALUATE on {d}")
        for op in hub.opinions.values():
            if op["proposal"] == proposal_id and op["author"] == evaluator:
                raise DuplicateOpinion(f"{evaluator} already opined on {proposal_id}")
        seq = hub._commit("opinion", {"proposal": proposal_id, "evaluator": evaluator,
                                      "verdict": verdict, "rationale": rationale,
                                      "at": hub.now()})
        return f"O{seq}"


def arbitrate(hub, arbiter: str, proposal_id: str, decision: str,
              rationale: str = "") -> str:
    from . import federation

    with hub._lock:
        prop = hub.proposals.get(proposal_id)
        if prop is None:
            raise UnknownProposal(f"unknown proposal: {proposal_id}")
        if prop["state"] != "UnderReview":
            raise NotUnderReview(f"proposal {proposal_id} is {prop['state']}")
        if decision not in DECISIONS:
            raise UnknownKind(f"decision must be one of {DECISIONS}")
        rights._require_principal(hub, arbiter)
        d = DatumRef.parse(prop["datum"])
        owner = federation.owner_of(hub, d)
        if owner is not None and owner != hub.instance_id:
            raise OwnershipViolation(f"{d} is owned by {owner}")
        if not rights.can_arbitrate(hub, arbiter, d):
            raise NotArbiter(f"{arbiter} does not arbitrate {d}")
        body = {"proposal": proposal_id, "arbiter": arbiter, "decision": decision,
                "rationale": rationale, "at": hub.now()}
        derived = []
        if decision == "Accept":
            from .model import decode_value

            value = decode_value(prop["value"])
            body["value"] = prop["value"]
            body["version"] = hub.next_version(d)
            # may raise NonTerminating before anything is written
            derived = propagation.compute_derived(hub, d, value)
        seq = hub._commit("arbitration", body)
        aid = f"A{seq}"
        propagation.commit_derived(hub, derived, seed_seq=seq)
        return aid


def review_queue(hub, principal: str) -> list[dict]:
    """Open proposals awaiting this principal's opinion or arbitration."""
    rights._require_principal(hub, principal)
    opined = {(op["proposal"], op["author"]) for op in hub.opinions.values()}
    rows = []
    for pid in sorted(hub.proposals, key=lambda p: hub.proposals[p]["seq"]):
        prop = hub.proposals[pid]
        if prop["state"] != "UnderReview":
            continue
        d = DatumRef.parse(prop["datum"])
        roles = []
        if principal in prop["evaluators"] and principal != prop["author"] \
                and (pid, principal) not in opined:
            roles.append("opinion")
        if rights.can_arbitrate(hub, principal, d):
            roles.append("arbitration")
        if roles:
            rows.append({"proposal": pid, "datum": prop["datum"],
                         "author": prop["author"], "value": prop["value"],
                         "rationale": prop["rationale"], "seq": prop["seq"],
                         "awaiting": roles})
    return rows
