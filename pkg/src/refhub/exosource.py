"""External-source integration: dictionaries, batch ingestion, agreement ranking.

A dictionary maps external record fields onto internal datums through a target
pattern (``{field.path}`` placeholders fill from the record) and a value
transform in the shared expression language. Harvested values never write
golden records directly: equal values are skipped, differing ones become
ordinary proposals authored by the source. The only exception is a source
resolving to ARBITRATE on the datum, whose commit is still a logged, audited
act (unreachable through delegation, which refuses ARBITRATE to sources).

Ranking scores every channel and source that authored proposals by its
acceptance ratio, recomputable from the log alone.
"""

from __future__ import annotations

import re
from fnmatch import fnmatchcase

from . import rights, visibility
from .errors import (
    HubError,
    InvalidDictionary,
    NotASource,
    UnknownSource,
)
from .model import DatumRef, EntityKind, coerce_value, encode_value
from .exprs import Expr

_PLACEHOLDER = re.compile(r"\{([^{}]+)\}")


def _extract(record: dict, path: str):
    cur = record
    for part in path.split("."):
        if not isinstance(cur, dict) or part not in cur:
            return None
        cur = cur[part]
    return cur


def _fill_target(pattern: str, record: dict) -> str:
    def sub(m):
        v = _extract(record, m.group(1))
        if v is None:
            raise KeyError(m.group(1))
        return str(v)

    return _PLACEHOLDER.sub(sub, pattern)


def target_pattern_matches(pattern: str, d: DatumRef) -> bool:
    """Whether a dictionary target pattern can address the datum (placeholders
    wildcard their segment)."""
    globbed = _PLACEHOLDER.sub("*", pattern)
    return fnmatchcase(str(d), globbed)


def register_source(hub, entity_id: str, mappings, version: int = 1) -> str:
    with hub._lock:
        ent = hub.entities.get(entity_id)
        if ent is None or ent.kind is not EntityKind.EXTERNAL_SOURCE:
            raise NotASource(f"{entity_id} is not an ExternalSource entity")
        rows = []
        for m in mappings:
            path, target = m.get("path"), m.get("target")
            transform = m.get("transform", "value")
            if not path or not target:
                raise InvalidDictionary(f"mapping needs path and target: {m!r}")
            attr = target.rpartition(".")[2]
            if "{" in attr or attr not in hub.attr_names:
                raise InvalidDictionary(f"target attribute unknown: {target!r}")
            expr = Expr(transform)
            if expr.free_names() - {"value"}:
                raise InvalidDictionary(f"transform may only use 'value': {transform!r}")
            rows.append({"path": path, "target": target, "transform": transform})
        hub._commit("source", {"entity": entity_id, "mappings": rows,
                               "version": int(version), "at": hub.now()})
        return entity_id


def ingest(hub, source: str, records) -> dict:
    """Map a batch through the source's dictionary. Every record ends up as a
    proposal, a skip, or a per-record error — never a partial write."""
    from . import workflow

    with hub._lock:
        reg = hub.sources.get(source)
        if reg is None:
            raise UnknownSource(f"source not registered: {source}")
        proposals: list[str] = []
        skipped: list[dict] = []
        errors: list[dict] = []
        for i, record in enumerate(records):
            if not isinstance(record, dict):
                errors.append({"record": i, "reason": "malformed record"})
                continue
            matched = False
            for mapping in reg["mappings"]:
                raw = _extract(record, mapping["path"])
                if raw is None:
                    continue
                matched = True
                try:
                    value = Expr(mapping["transform"]).evaluate(
                        {"value": coerce_value(raw)})
                    target = _fill_target(mapping["target"], record)
                    d = hub.resolve_datum(DatumRef.parse(target))
                    value = hub.check_value(d, value)
                except KeyError as exc:
                    errors.append({"record": i, "reason": f"missing field {exc}"})
                    continue
                except HubError as exc:
                    errors.append({"record": i, "reason": f"{exc.code}: {exc}"})
                    continue
                if hub.goldens[d][-1].value == value:
                    skipped.append({"record": i, "datum": str(d), "reason": "equal"})
                    continue
                try:
                    if rights.resolve_rights(hub, source, d) >= rights.Right.ARBITRATE:
                        proposals.append(_elevated_commit(hub, source, d, value))
                    else:
                        proposals.append(workflow.propose(
                            hub, source, d, value,
                            rationale=f"harvested by {source}"))
                except HubError as exc:
                    errors.append({"record": i, "datum": str(d),
                                   "reason": f"{exc.code}: {exc}"})
            if not matched:
                errors.append({"record": i, "reason": "no mapping matched"})
        return {"proposals": proposals, "skipped": skipped, "errors": errors}


def _elevated_commit(hub, source: str, d: DatumRef, value) -> str:
    from . import propagation

    version = hub.next_version(d)
    derived = propagation.compute_derived(hub, d, value)
    seq = hub._commit("ingest_commit", {"datum": str(d), "value": encode_value(value),
                                        "version": version, "source": source,
                                        "at": hub.now()})
    propagation.commit_derived(hub, derived, seed_seq=seq)
    return f"N{seq}"


def rank(hub, scope=None) -> list[dict]:
    """Agreement scores, best first. A subject is any channel or registered
    source that authored proposals in scope; channels are credited with the
    proposals of their community members on datums within their scope.
    Subjects under the minimum sample are listed unranked at the end."""
    patterns = list(scope) if scope else None
    counts: dict[tuple[str, str], dict] = {}

    def bump(kind: str, sid: str, arbitrated: bool, accepted: bool) -> None:
        row = counts.setdefault((kind, sid), {"accepted": 0, "arbitrated": 0,
                                              "proposals": 0})
        row["proposals"] += 1
        if arbitrated:
            row["arbitrated"] += 1
        if accepted:
            row["accepted"] += 1

    scopes = {c: rights.channel_scope(hub, c) for c in hub.channels}
    communities = {c: set(visibility.community_of(hub, c)) for c in hub.channels}
    for prop in hub.proposals.values():
        d = DatumRef.parse(prop["datum"])
        if patterns is not None and not rights.matches_scope(d, patterns):
            continue
        arbitrated = prop["state"] in ("Accepted", "Rejected")
        accepted = prop["state"] == "Accepted"
        author = prop["author"]
        if author in hub.sources:
            bump("source", author, arbitrated, accepted)
        for c in hub.channels:
            if d in scopes[c] and author in communities[c]:
                bump("channel", c, arbitrated, accepted)

    rows = []
    for (kind, sid), row in counts.items():
        score = row["accepted"] / row["arbitrated"] \
            if row["arbitrated"] >= hub.min_sample else None
        rows.append({"subject": sid, "kind": kind, "accepted": row["accepted"],
                     "arbitrated": row["arbitrated"], "score": score})
    ranked = sorted((r for r in rows if r["score"] is not None),
                    key=lambda r: (-r["score"], -r["arbitrated"], r["subject"]))
    unranked = sorted((r for r in rows if r["score"] is None),
                      key=lambda r: r["subject"])
    return ranked + unranked


def load_dictionary_file(hub, path: str) -> str:
    from .eventlog import parse_json

    with open(path, encoding="utf-8") as fh:
        doc = parse_json(fh.read())
    existing = hub.sources.get(doc["source"])
    if existing and existing["version"] >= doc.get("version", 1):
        return doc["source"]
    return register_source(hub, doc["source"], doc["mappings"],
                           doc.get("version", 1))


def read_records_file(path: str) -> list[dict]:
    """Line-delimited records with a per-source field schema."""
    from .eventlog import parse_json

    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append(parse_json(line))
    return rows
