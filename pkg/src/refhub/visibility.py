"""Graph-derived visibility: who is concerned by which data.

All derivations are pure functions of the current graph and are recomputed on
every call; nothing here is cached or persisted. List results are sorted so
query responses are reproducible.

The collection of data governed by an entity's community is the four-part
union: the entity's own attributes, attributes on its parent edges, attributes
on its child edges, and attributes on relevance-flagged edges from its
children's other parents.
"""

from __future__ import annotations

from .errors import NotAnIndividual, UnknownEntity
from .model import DatumRef, EntityKind


def _require_entity(hub, entity_id: str) -> None:
    if entity_id not in hub.entities:
        raise UnknownEntity(f"unknown entity: {entity_id}")


def neighbors(hub, entity_id: str) -> set[str]:
    return hub.parents.get(entity_id, set()) | hub.children.get(entity_id, set())


def community_of(hub, entity_id: str) -> list[str]:
    """Individuals connected to the entity, in either direction."""
    _require_entity(hub, entity_id)
    return sorted(n for n in neighbors(hub, entity_id)
                  if hub.entities[n].kind is EntityKind.INDIVIDUAL)


def collection_of(hub, entity_id: str) -> list[DatumRef]:
    _require_entity(hub, entity_id)
    out: set[DatumRef] = set()
    ent = hub.entities[entity_id]
    for attr in ent.attrs:
        out.add(DatumRef.entity(entity_id, attr))
    for p in hub.parents.get(entity_id, set()):
        conn = hub.connections[(p, entity_id)]
        out.update(DatumRef.connection(p, entity_id, a) for a in conn.attrs)
    for c in hub.children.get(entity_id, set()):
        conn = hub.connections[(entity_id, c)]
        out.update(DatumRef.connection(entity_id, c, a) for a in conn.attrs)
        for q in hub.parents.get(c, set()):
            if q == entity_id:
                continue
            other = hub.connections[(q, c)]
            if other.relevance_flag:
                out.update(DatumRef.connection(q, c, a) for a in other.attrs)
    return sorted(out)


def field_of_action(hub, individual_id: str) -> list[DatumRef]:
    """Union of the collections of every entity the individual touches."""
    _require_entity(hub, individual_id)
    if hub.entities[individual_id].kind is not EntityKind.INDIVIDUAL:
        raise NotAnIndividual(f"{individual_id} is not an Individual")
    out: set[DatumRef] = set()
    for e in neighbors(hub, individual_id):
        out.update(collection_of(hub, e))
    return sorted(out)


def concerned_entities(hub, d: DatumRef) -> list[str]:
    """Entities whose collection contains the datum."""
    return sorted(e for e in hub.entities
                  if d in set(collection_of(hub, e)))


def area_of_visibility(hub, intervention_id: str) -> list[str]:
    """Everyone entitled to observe an intervention: the union of the
    communities of every entity whose collection contains its datum."""
    d = hub.find_intervention(intervention_id)
    viewers: set[str] = set()
    for e in concerned_entities(hub, d):
        viewers.update(community_of(hub, e))
    return sorted(viewers)
