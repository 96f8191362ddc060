"""Prioritized rights resolution, channel configuration, grants/censors, delegation.

Rights form a chain NONE < READ < WARN < PROPOSE < EVALUATE < ARBITRATE;
holding a level implies everything below it. A principal's right on a datum:

  1. each concerned channel whose community contains the principal contributes
     the right its role_map assigns to the principal's role (the golden value
     of the ``role`` attribute on the edge between principal and channel
     entity), adjusted by channel-targeted grants then censors;
  2. the base is the max contribution, raised by principal-targeted grants,
     then capped by principal-targeted censors (a censor beats a grant);
  3. registered external sources add PROPOSE on their dictionary footprint;
  4. active delegations contribute their delegated level directly (they were
     bounded by the delegator's resolution when granted).

Arbitration power follows the unique-arbiter rule: exactly one concerned
channel per datum, either flagged explicitly or defaulting to the channel of
the datum's anchor entity (the entity itself for specific attributes, the
parent for connection attributes). configure_channel refuses any write that
would leave a covered datum with zero or two arbiters.
"""

from __future__ import annotations

from enum import IntEnum
from fnmatch import fnmatchcase

from . import visibility
from .errors import (
    ArbitrateToSource,
    ExceedsDelegator,
    ExpiredOnArrival,
    InsufficientAuthority,
    MultipleArbiters,
    NoArbiter,
    UnknownChannel,
    UnknownEntity,
    UnknownPrincipal,
)
from .model import DatumRef, EntityKind


class Right(IntEnum):
    NONE = 0
    READ = 1
    WARN = 2
    PROPOSE = 3
    EVALUATE = 4
    ARBITRATE = 5

    @staticmethod
    def parse(name) -> "Right":
        if isinstance(name, Right):
            return name
        if isinstance(name, int):
            return Right(name)
        try:
            return Right[str(name).upper()]
        except KeyError:
            raise UnknownChannel(f"unknown right level: {name!r}")


ROLE_ATTR = "role"

PRINCIPAL_KINDS = (EntityKind.INDIVIDUAL, EntityKind.EXTERNAL_SOURCE)


def _require_principal(hub, pid: str) -> None:
    ent = hub.entities.get(pid)
    if ent is None or ent.kind not in PRINCIPAL_KINDS:
        raise UnknownPrincipal(f"unknown principal: {pid}")


def matches_scope(d: DatumRef, patterns) -> bool:
    s = str(d)
    return any(fnmatchcase(s, p) for p in patterns)


def current_seq(hub) -> int:
    return hub.log.last_seq


def _active(hub, row: dict) -> bool:
    return row["expiry"] is None or row["expiry"] > current_seq(hub)


# ---------------------------------------------------------------- channels

def channel_scope(hub, entity_id: str) -> set[DatumRef]:
    return set(visibility.collection_of(hub, entity_id))


def concerned_channels(hub, d: DatumRef) -> list[str]:
    return sorted(e for e in hub.channels if d in channel_scope(hub, e))


def anchor_entity(d: DatumRef) -> str:
    return d.parent


def _resolve_arbiter(hub, d: DatumRef, channel_ids) -> str:
    flagged = [c for c in channel_ids if hub.channels[c]["is_arbiter"]]
    if len(flagged) > 1:
        raise MultipleArbiters(f"{len(flagged)} arbiter channels for {d}: {flagged}")
    if flagged:
        return flagged[0]
    anchor = anchor_entity(d)
    if anchor in channel_ids:
        return anchor
    raise NoArbiter(f"no channel resolves arbitration for {d}")


def arbiter_channel(hub, datum) -> str:
    d = hub.resolve_datum(datum)
    concerned = concerned_channels(hub, d)
    if not concerned:
        raise NoArbiter(f"no channel is concerned by {d}")
    return _resolve_arbiter(hub, d, concerned)


def configure_channel(hub, entity_id: str, role_map: dict, is_arbiter: bool = False,
                      mobilized_level: int = 4, grant_rules=(), censor_rules=()) -> str:
    """Create or replace the entity's channel. Rejected if any datum covered by
    any channel would end up with zero or multiple arbiters."""
    with hub._lock:
        if entity_id not in hub.entities:
            raise UnknownEntity(f"unknown entity: {entity_id}")
        parsed = {role: Right.parse(level).name.capitalize()
                  for role, level in role_map.items()}
        staged = dict(hub.channels)
        staged[entity_id] = {"entity": entity_id, "role_map": parsed,
                             "is_arbiter": bool(is_arbiter),
                             "mobilized_level": int(mobilized_level), "seq": 0}
        covered: set[DatumRef] = set()
        scopes = {c: channel_scope(hub, c) for c in staged}
        for s in scopes.values():
            covered |= s
        for d in covered:
            concerned = [c for c in staged if d in scopes[c]]
            flagged = [c for c in concerned if staged[c]["is_arbiter"]]
            if len(flagged) > 1:
                raise MultipleArbiters(f"{flagged} would all arbitrate {d}")
            if not flagged and anchor_entity(d) not in concerned:
                raise NoArbiter(f"no channel would arbitrate {d}")
        hub._commit("channel", {"entity": entity_id, "role_map": parsed,
                                "is_arbiter": bool(is_arbiter),
                                "mobilized_level": int(mobilized_level),
                                "at": hub.now()})
        for tmpl in grant_rules:
            apply_adjustment(hub, kind="Grant", issuer=entity_id, **tmpl)
        for tmpl in censor_rules:
            apply_adjustment(hub, kind="Censor", issuer=entity_id, **tmpl)
        return entity_id


def role_of(hub, principal: str, entity_id: str):
    """The principal's role token within an entity's community: the golden
    value of the role attribute on the edge between them, either direction."""
    for key in ((entity_id, principal), (principal, entity_id)):
        conn = hub.connections.get(key)
        if conn and ROLE_ATTR in conn.attrs:
            d = DatumRef.connection(key[0], key[1], ROLE_ATTR)
            return str(hub.goldens[d][-1].value)
    return None


def channel_capacity(hub, channel_id: str, d: DatumRef) -> Right:
    """The strongest right a channel can confer, if the datum is in its scope."""
    ch = hub.channels[channel_id]
    if d not in channel_scope(hub, channel_id):
        return Right.NONE
    levels = [Right.parse(v) for v in ch["role_map"].values()]
    return max(levels, default=Right.NONE)


def _channel_adjusted(hub, channel_id: str, role, level: Right, d: DatumRef) -> Right:
    grants, censors = [], []
    for adj in hub.adjustments:
        t = adj["target"]
        if t["type"] != "channel" or t["id"] != channel_id:
            continue
        if t.get("role") is not None and t["role"] != role:
            continue
        if not _active(hub, adj) or not matches_scope(d, adj["scope"]):
            continue
        (grants if adj["kind"] == "Grant" else censors).append(Right.parse(adj["level"]))
    if grants:
        level = max(level, max(grants))
    if censors:
        level = min(level, min(censors))
    return level


def channel_contribution(hub, channel_id: str, principal: str, d: DatumRef) -> Right:
    ch = hub.channels[channel_id]
    if d not in channel_scope(hub, channel_id):
        return Right.NONE
    if principal not in visibility.community_of(hub, channel_id):
        return Right.NONE
    role = role_of(hub, principal, channel_id)
    if role is None or role not in ch["role_map"]:
        return Right.NONE
    base = Right.parse(ch["role_map"][role])
    return _channel_adjusted(hub, channel_id, role, base, d)


def _principal_adjusted(hub, principal: str, level: Right, d: DatumRef) -> Right:
    grants, censors = [], []
    for adj in hub.adjustments:
        t = adj["target"]
        if t["type"] != "principal" or t["id"] != principal:
            continue
        if not _active(hub, adj) or not matches_scope(d, adj["scope"]):
            continue
        (grants if adj["kind"] == "Grant" else censors).append(Right.parse(adj["level"]))
    if grants:
        level = max(level, max(grants))
    if censors:
        level = min(level, min(censors))
    return level


def source_footprint(hub, principal: str, d: DatumRef) -> bool:
    src = hub.sources.get(principal)
    if not src:
        return False
    from .exosource import target_pattern_matches

    return any(target_pattern_matches(m["target"], d) for m in src["mappings"])


def delegated_level(hub, principal: str, d: DatumRef) -> Right:
    best = Right.NONE
    for row in hub.delegations:
        if row["to"] != principal or not _active(hub, row):
            continue
        if matches_scope(d, row["scope"]):
            best = max(best, Right.parse(row["level"]))
    return best


def resolve_rights(hub, principal: str, datum) -> Right:
    _require_principal(hub, principal)
    d = hub.resolve_datum(datum)
    base = Right.NONE
    for c in concerned_channels(hub, d):
        base = max(base, channel_contribution(hub, c, principal, d))
    if source_footprint(hub, principal, d):
        base = max(base, Right.PROPOSE)
    base = _principal_adjusted(hub, principal, base, d)
    return max(base, delegated_level(hub, principal, d))


def can_arbitrate(hub, principal: str, d: DatumRef) -> bool:
    """Arbitration requires ARBITRATE resolved through the datum's unique
    arbiter channel, or an explicit ARBITRATE delegation covering the datum."""
    try:
        ch = arbiter_channel(hub, d)
    except (NoArbiter, MultipleArbiters):
        return False
    own = channel_contribution(hub, ch, principal, d)
    own = _principal_adjusted(hub, principal, own, d)
    if own >= Right.ARBITRATE:
        return True
    return delegated_level(hub, principal, d) >= Right.ARBITRATE


def mobilized_evaluators(hub, d: DatumRef, exclude: str = "") -> list[str]:
    """Members asked for an opinion: per concerned channel, community members
    whose (adjusted) role right reaches the channel's mobilized level."""
    out: set[str] = set()
    for c in concerned_channels(hub, d):
        threshold = Right(hub.channels[c]["mobilized_level"])
        for member in visibility.community_of(hub, c):
            if member == exclude:
                continue
            if channel_contribution(hub, c, member, d) >= threshold:
                out.add(member)
    return sorted(out)


# ------------------------------------------------------------- adjustments

def describing_data(hub, entity_id: str) -> list[DatumRef]:
    """The hierarchical data describing an entity's channel: the attributes on
    its parent-side edges (the constraints weighing on it)."""
    out = []
    for p in sorted(hub.parents.get(entity_id, set())):
        conn = hub.connections[(p, entity_id)]
        out.extend(DatumRef.connection(p, entity_id, a) for a in conn.attrs)
    return out


def apply_adjustment(hub, kind: str, issuer: str, target: dict, scope,
                     level, expiry=None) -> str:
    """Grant raises to, censor caps at, the given level, until expiry.

    The issuer channel must hold at least PROPOSE on some datum describing the
    target (its entity's parent-edge attributes).
    """
    with hub._lock:
        if kind not in ("Grant", "Censor"):
            raise UnknownChannel(f"unknown adjustment kind: {kind!r}")
        if issuer not in hub.channels:
            raise UnknownChannel(f"unknown issuer channel: {issuer}")
        if expiry is not None and expiry <= current_seq(hub):
            raise ExpiredOnArrival(f"expiry {expiry} <= current seq {current_seq(hub)}")
        ttype, tid = target.get("type"), target.get("id")
        if ttype == "channel":
            if tid not in hub.channels:
                raise UnknownChannel(f"unknown target channel: {tid}")
        elif ttype == "principal":
            _require_principal(hub, tid)
        else:
            raise UnknownChannel(f"bad adjustment target: {target!r}")
        lvl = Right.parse(level)
        held = any(channel_capacity(hub, issuer, d0) >= Right.PROPOSE
                   for d0 in describing_data(hub, tid))
        if not held:
            raise InsufficientAuthority(
                f"channel {issuer} holds no right on data describing {tid}")
        seq = hub._commit("adjustment", {
            "kind": kind, "issuer": issuer,
            "target": {"type": ttype, "id": tid, "role": target.get("role")},
            "scope": list(scope), "level": lvl.name.capitalize(),
            "expiry": expiry, "at": hub.now()})
        return f"J{seq}"


def delegate(hub, frm: str, to: str, level, scope, expiry=None) -> str:
    with hub._lock:
        _require_principal(hub, frm)
        _require_principal(hub, to)
        lvl = Right.parse(level)
        if lvl >= Right.ARBITRATE and \
                hub.entities[to].kind is EntityKind.EXTERNAL_SOURCE:
            raise ArbitrateToSource("ARBITRATE cannot be delegated to a source")
        if expiry is not None and expiry <= current_seq(hub):
            raise ExpiredOnArrival(f"expiry {expiry} <= current seq {current_seq(hub)}")
        patterns = list(scope)
        for d in hub.goldens:
            if matches_scope(d, patterns):
                if resolve_rights(hub, frm, d) < lvl:
                    raise ExceedsDelegator(
                        f"{frm} holds less than {lvl.name} on {d}")
        seq = hub._commit("delegation", {"from": frm, "to": to,
                                         "level": lvl.name.capitalize(),
                                         "scope": patterns, "expiry": expiry,
                                         "at": hub.now()})
        return f"D{seq}"


def effective_rights(hub, principal: str) -> list[dict]:
    """The monitoring view: the principal's whole field of action, each datum
    annotated with its resolved right, current value, and reliability."""
    _require_principal(hub, principal)
    if hub.entities[principal].kind is EntityKind.INDIVIDUAL:
        datums = visibility.field_of_action(hub, principal)
    else:
        datums = sorted(d for d in hub.goldens
                        if source_footprint(hub, principal, d)
                        or delegated_level(hub, principal, d) > Right.NONE)
    rows = []
    for d in datums:
        rec = hub.read_golden(d)
        rows.append({"datum": str(d), "right": resolve_rights(hub, principal, d).name,
                     "value": rec.to_json()["value"], "version": rec.version,
                     "reliability": rec.reliability.value})
    return rows
