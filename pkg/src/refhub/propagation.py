"""Derivation rules applied transitively after each golden commit.

A rule watches one attribute on one entity kind (or on one edge kind) and,
when a commit lands there, derives a new value for a target attribute on the
neighbouring entities in its direction. Derived changes commit as
system-authored golden versions (committed_by names the rule) and seed further
rules breadth-first, until a fixpoint or the |V|+|E| round bound.

Everything is computed against a value overlay first; nothing is written
until the whole cascade is known to terminate, so readers never see a
half-propagated state and a diverging cascade aborts the triggering commit.

Derivation environment: the target's current attributes by name, the trigger
attribute's name bound to the freshly committed value (shadowing the target's
attribute of the same name, if any), and ``value`` always bound to the
trigger value.
"""

from __future__ import annotations

from .errors import (
    DerivationTypeError,
    DuplicatePriority,
    DuplicateRule,
    NonTerminating,
    UnknownAttribute,
    UnknownKind,
)
from .exprs import Expr
from .model import DatumRef, EntityKind, encode_value, value_tag

DIRECTIONS = ("to-children", "to-parents")


def register_rule(hub, trigger_attr: str, target_attr: str, derivation: str,
                  direction: str = "to-children", priority: int = 100,
                  entity_kind=None, edge_kind=None, rule_id=None) -> str:
    with hub._lock:
        if direction not in DIRECTIONS:
            raise UnknownKind(f"direction must be one of {DIRECTIONS}")
        if (entity_kind is None) == (edge_kind is None):
            raise UnknownKind("a rule watches either an entity kind or an edge kind")
        if entity_kind is not None:
            try:
                entity_kind = EntityKind(entity_kind).value
            except ValueError:
                raise UnknownKind(f"unknown entity kind: {entity_kind!r}")
        else:
            try:
                edge_kind = [EntityKind(k).value for k in edge_kind]
            except (ValueError, TypeError):
                raise UnknownKind(f"bad edge kind: {edge_kind!r}")
        for attr in (trigger_attr, target_attr):
            if attr not in hub.attr_names:
                raise UnknownAttribute(f"unknown attribute: {attr!r}")
        expr = Expr(derivation)
        unknown = expr.free_names() - hub.attr_names - {"value"}
        if unknown:
            raise UnknownAttribute(f"derivation references unknown names: {sorted(unknown)}")
        priority = int(priority)
        if priority in hub.rule_priorities:
            raise DuplicatePriority(f"priority {priority} is taken by "
                                    f"{hub.rule_priorities[priority]}")
        rid = rule_id or f"R{hub.log.last_seq + 1}"
        if rid in hub.rules:
            raise DuplicateRule(f"rule exists: {rid}")
        hub._commit("rule", {"id": rid, "trigger_attr": trigger_attr,
                             "target_attr": target_attr, "derivation": derivation,
                             "direction": direction, "priority": priority,
                             "entity_kind": entity_kind, "edge_kind": edge_kind,
                             "at": hub.now()})
        return rid


def load_rules_file(hub, path: str) -> list[str]:
    """Register rules from a declarative file; rules already present are kept."""
    from .eventlog import parse_json

    with open(path, encoding="utf-8") as fh:
        rows = parse_json(fh.read())
    out = []
    for row in rows:
        rid = row.get("id")
        if rid and rid in hub.rules:
            continue
        out.append(register_rule(
            hub, trigger_attr=row["trigger"]["attr"],
            entity_kind=row["trigger"].get("entity_kind"),
            edge_kind=row["trigger"].get("edge_kind"),
            direction=row["direction"], target_attr=row["target_attr"],
            derivation=row["derivation"], priority=row["priority"], rule_id=rid))
    return out


def _rules_matching(hub, d: DatumRef) -> list[dict]:
    out = []
    for rule in hub.rules.values():
        if rule["trigger_attr"] != d.attr:
            continue
        if d.is_connection:
            ek = rule["edge_kind"]
            if ek and [hub.entities[d.parent].kind.value,
                       hub.entities[d.child].kind.value] == list(ek):
                out.append(rule)
        else:
            if rule["entity_kind"] == hub.entities[d.parent].kind.value:
                out.append(rule)
    return sorted(out, key=lambda r: r["priority"])


def compute_derived(hub, seed: DatumRef, seed_value) -> list[dict]:
    """Pure cascade from one committed change; raises NonTerminating past the
    |V|+|E| round bound without touching state."""
    from . import federation

    overlay: dict[DatumRef, object] = {seed: seed_value}

    def current(d: DatumRef):
        return overlay[d] if d in overlay else hub.goldens[d][-1].value

    derived: list[dict] = []
    frontier: list[tuple[DatumRef, object]] = [(seed, seed_value)]
    bound = len(hub.entities) + len(hub.connections)
    rounds = 0
    while frontier:
        rounds += 1
        if rounds > bound:
            raise NonTerminating(f"no fixpoint within {bound} rounds")
        next_frontier: list[tuple[DatumRef, object]] = []
        for d, val in frontier:
            anchor = d.child if d.is_connection else d.parent
            for rule in _rules_matching(hub, d):
                attr = rule["target_attr"]
                if rule["direction"] == "to-children":
                    edges = [(anchor, c) for c in sorted(hub.children.get(anchor, set()))]
                else:
                    edges = [(p, anchor) for p in sorted(hub.parents.get(anchor, set()))]
                for p, c in edges:
                    t = c if rule["direction"] == "to-children" else p
                    # a rule may land on the traversed edge's attribute or on
                    # the neighbour entity's own attribute, whichever exists
                    candidates = [DatumRef.connection(p, c, attr),
                                  DatumRef.entity(t, attr)]
                    for td in candidates:
                        if td not in hub.goldens:
                            continue
                        owner = federation.owner_of(hub, td)
                        if owner is not None and owner != hub.instance_id:
                            continue
                        env = {a: current(DatumRef.entity(t, a))
                               for a in hub.entities[t].attrs}
                        for a in hub.connections[(p, c)].attrs:
                            env[a] = current(DatumRef.connection(p, c, a))
                        env[rule["trigger_attr"]] = val
                        env["value"] = val
                        try:
                            new = Expr(rule["derivation"]).evaluate(env)
                        except KeyError:
                            continue  # a referenced attribute is absent here
                        new = _coerce(new, hub.datum_tag[td], td)
                        if new == current(td) and value_tag(new) == \
                                value_tag(current(td)):
                            continue
                        overlay[td] = new
                        derived.append({"datum": td, "value": new, "rule": rule["id"]})
                        next_frontier.append((td, new))
        frontier = next_frontier
    return derived


def _coerce(value, want: str, td: DatumRef):
    from decimal import Decimal

    tag = value_tag(value) if not isinstance(value, bool) else "bool"
    if tag == want:
        return value
    if want == "integer" and tag == "decimal" and value == value.to_integral_value():
        return int(value)
    if want == "decimal" and tag == "integer":
        return Decimal(value)
    raise DerivationTypeError(f"derived {tag} for {td}, which holds {want}")


def commit_derived(hub, derived: list[dict], seed_seq: int) -> list[dict]:
    out = []
    for ch in derived:
        d = ch["datum"]
        version = hub.next_version(d)
        hub._commit("derived", {"datum": str(d), "value": encode_value(ch["value"]),
                                "version": version, "rule": ch["rule"],
                                "seed_seq": seed_seq, "at": hub.now()})
        out.append({"datum": str(d), "value": encode_value(ch["value"]),
                    "version": version, "rule": ch["rule"]})
    return out


def propagate(hub, datum) -> list[dict]:
    """Re-run the cascade from a datum's current golden value and commit
    whatever it derives (nothing, at a fixpoint)."""
    with hub._lock:
        d = hub.resolve_datum(datum)
        seed_rec = hub.goldens[d][-1]
        derived = compute_derived(hub, d, seed_rec.value)
        return commit_derived(hub, derived, seed_seq=seed_rec.seq)
