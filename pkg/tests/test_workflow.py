"""Warnings, proposals, opinions, arbitrations, the audit trail."""

import pytest

from refhub import Reliability
from refhub.errors import (
    DuplicateOpinion,
    InsufficientRights,
    MissingRationale,
    NotArbiter,
    NotUnderReview,
    ProposalInFlight,
    RateLimited,
    SelfReview,
    UnknownDatum,
)
from refhub.eventlog import canonical_json


def accept_scenario(h):
    pid = h.propose("alice", "lab.budget", 100, "uplift")
    h.opine("bob", pid, "Support", "fits plan")
    aid = h.arbitrate("bob", pid, "Accept", "approved")
    return pid, aid


# ------------------------------------------------------------------ warnings

def test_warn_sets_contested_and_is_authorless(f1_channels):
    h = f1_channels
    h.warn("lab.budget", "stale", caller="alice")
    assert h.read_golden("lab.budget").reliability is Reliability.CONTESTED
    warning_entries = [e for e in h.datum_history("lab.budget")
                       if e["kind"] == "warning"]
    assert len(warning_entries) == 1
    assert "author" not in warning_entries[0]


def test_warn_below_warn_level(f1_channels):
    with pytest.raises(InsufficientRights):
        f1_channels.warn("lab.budget", "hm", caller="hrdb")


def test_warn_unknown_datum(f1_channels):
    with pytest.raises(UnknownDatum):
        f1_channels.warn("lab.missing", "x", caller="alice")


def test_warning_log_records_carry_no_principal(f1_channels):
    h = f1_channels
    for i in range(50):
        h.warn("lab.budget", f"note {i}", caller="alice")
    principals = [e.id.encode() for e in h.entities.values()]
    for rec in h.log.records():
        if rec["kind"] != "warning":
            continue
        blob = canonical_json(rec).encode()
        for p in principals:
            assert p not in blob.replace(b"lab.budget", b"")


def test_warn_rate_limit(f1_channels):
    h = f1_channels
    h.warn_rate = 5
    for i in range(5):
        h.warn("lab.budget", f"n{i}", caller="alice", session="tok")
    with pytest.raises(RateLimited):
        h.warn("lab.budget", "one too many", caller="alice", session="tok")
    # another session is unaffected
    h.warn("lab.budget", "ok", caller="alice", session="tok2")


# ----------------------------------------------------------------- proposals

def test_propose_under_review_with_evaluators(f1_channels):
    h = f1_channels
    pid = h.propose("alice", "lab.budget", 100, "uplift")
    prop = h.proposals[pid]
    assert prop["state"] == "UnderReview"
    assert prop["evaluators"] == ["bob"]
    assert prop["arbiter"] == "lab"
    assert h.read_golden("lab.budget").reliability is Reliability.PROPOSED


def test_propose_single_slot(f1_channels):
    h = f1_channels
    h.propose("alice", "lab.budget", 100, "uplift")
    with pytest.raises(ProposalInFlight):
        h.propose("bob", "lab.budget", 90, "rival")


def test_propose_requires_rights(f1_channels):
    with pytest.raises(InsufficientRights):
        f1_channels.propose("hrdb", "lab.budget", 5, "no standing")


def test_source_proposes_with_delegation(f1_channels):
    h = f1_channels
    h.delegate("alice", "hrdb", "Propose", ["alice->server.login"])
    pid = h.propose("hrdb", "alice->server.login", "alice02", "sync")
    assert h.proposals[pid]["author"] == "hrdb"


# ------------------------------------------------------------------ opinions

def test_opine_happy_path(f1_channels):
    h = f1_channels
    pid = h.propose("alice", "lab.budget", 100, "uplift")
    oid = h.opine("bob", pid, "Object", "over quota")
    assert h.opinions[oid]["verdict"] == "Object"


def test_opine_twice(f1_channels):
    h = f1_channels
    pid = h.propose("alice", "lab.budget", 100, "uplift")
    h.opine("bob", pid, "Support", "ok")
    with pytest.raises(DuplicateOpinion):
        h.opine("bob", pid, "Object", "changed my mind")


def test_self_review_refused(f1_channels):
    h = f1_channels
    h.delegate("bob", "alice", "Evaluate", ["lab.budget"])
    pid = h.propose("alice", "lab.budget", 100, "uplift")
    with pytest.raises(SelfReview):
        h.opine("alice", pid, "Support", "of course")


def test_opinion_needs_rationale(f1_channels):
    h = f1_channels
    pid = h.propose("alice", "lab.budget", 100, "uplift")
    with pytest.raises(MissingRationale):
        h.opine("bob", pid, "Support", "   ")


def test_opine_requires_evaluate(f1_channels):
    h = f1_channels
    pid = h.propose("bob", "lab.budget", 100, "uplift")
    with pytest.raises(InsufficientRights):
        h.opine("alice", pid, "Support", "sounds nice")  # alice holds Propose


# -------------------------------------------------------------- arbitrations

def test_accept_commits_golden_v2(f1_channels):
    h = f1_channels
    accept_scenario(h)
    rec = h.read_golden("lab.budget")
    assert (rec.value, rec.version, rec.reliability) == (100, 2, Reliability.GOLDEN)


def test_reject_leaves_golden(f1_channels):
    h = f1_channels
    pid = h.propose("alice", "lab.budget", 100, "uplift")
    h.arbitrate("bob", pid, "Reject", "not now")
    rec = h.read_golden("lab.budget")
    assert (rec.value, rec.version) == (0, 1)
    assert h.proposals[pid]["state"] == "Rejected"


def test_non_arbiter_refused(f1_eval):
    h = f1_eval  # managers only Evaluate here
    pid = h.propose("alice", "lab.budget", 100, "uplift")
    with pytest.raises(NotArbiter):
        h.arbitrate("bob", pid, "Accept", "let me try")


def test_arbitrate_terminal(f1_channels):
    h = f1_channels
    pid, _ = accept_scenario(h)
    with pytest.raises(NotUnderReview):
        h.arbitrate("bob", pid, "Reject", "again")
    with pytest.raises(NotUnderReview):
        h.opine("bob", pid, "Object", "too late")


def test_arbitration_resolves_warnings(f1_channels):
    h = f1_channels
    h.warn("lab.budget", "stale", caller="alice")
    assert h.read_golden("lab.budget").reliability is Reliability.CONTESTED
    pid = h.propose("alice", "lab.budget", 100, "uplift")
    h.arbitrate("bob", pid, "Reject", "no")
    # warnings cleared by the arbitration, accepted or not
    assert h.read_golden("lab.budget").reliability is Reliability.UNVERIFIED


def test_delegated_arbitration(f1_channels):
    h = f1_channels
    h.delegate("bob", "alice", "Arbitrate", ["lab->server.quota"])
    pid = h.propose("bob", "lab->server.quota", 120, "bump")
    aid = h.arbitrate("alice", pid, "Accept", "fine by me")
    assert h.read_golden("lab->server.quota").value == 120
    assert h.arbitrations[aid]["author"] == "alice"


def test_reproposal_of_rejected_value_flagged(f1_channels):
    h = f1_channels
    pid = h.propose("alice", "lab.budget", 100, "uplift")
    h.arbitrate("bob", pid, "Reject", "no")
    pid2 = h.propose("alice", "lab.budget", 100, "once more")
    entry = [e for e in h.audit_trail("lab.budget")
             if e["kind"] == "proposal" and e["id"] == pid2][0]
    assert entry["repeats_rejected"] is True


# -------------------------------------------------------------- audit / queue

def test_audit_trail_accept_scenario(f1_channels):
    h = f1_channels
    accept_scenario(h)
    trail = h.audit_trail("lab.budget")
    assert [e["kind"] for e in trail] == \
        ["creation", "proposal", "opinion", "arbitration"]
    assert trail[1]["author"] == "alice"
    assert trail[2]["author"] == "bob"
    assert trail[3]["version"] == 2
    assert [e["version"] for e in trail if "version" in e] == [1, 2]


def test_trail_fresh_datum(f1):
    assert [e["kind"] for e in f1.audit_trail("lab.budget")] == ["creation"]


def test_interventions_visible_to_area(f1_channels):
    h = f1_channels
    pid, _ = accept_scenario(h)
    viewers = h.area_of_visibility(pid)
    assert viewers == ["alice", "bob"]
    trail_ids = {e.get("id") for e in h.audit_trail("lab.budget")}
    assert pid in trail_ids


def test_review_queue(f1_channels):
    h = f1_channels
    pid = h.propose("alice", "lab.budget", 100, "uplift")
    queue_bob = h.review_queue("bob")
    assert [q["proposal"] for q in queue_bob] == [pid]
    assert set(queue_bob[0]["awaiting"]) == {"opinion", "arbitration"}
    assert h.review_queue("alice") == []  # authors do not review themselves
    h.opine("bob", pid, "Support", "ok")
    queue_bob = h.review_queue("bob")
    assert queue_bob[0]["awaiting"] == ["arbitration"]
    h.arbitrate("bob", pid, "Accept", "done")
    assert h.review_queue("bob") == []
