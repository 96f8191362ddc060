"""HTTP surface of a hub instance.

Every effect the system supports goes through these endpoints — peers sync
here, the operator CLI mirrors them 1:1, and the console consumes them
exclusively. Responses carry an explicit schema version; list responses are
deterministically ordered and paginated.

Anonymity at the wire: POST /warnings takes the caller only as a session
token header (rate limiting + rights check), never in the body, and stores
nothing about them.
"""

from __future__ import annotations

from typing import Optional

from fastapi import Body, FastAPI, Header, Query, Request, Response
from fastapi.responses import JSONResponse

from . import exosource, federation, propagation
from .errors import HubError, InsufficientRights, PortUnavailable
from .hub import SCHEMA, Hub
from .model import coerce_value, decode_value

_STATUS = {
    "UnknownEntity": 404, "UnknownDatum": 404, "UnknownAuthor": 404,
    "UnknownPrincipal": 404, "UnknownIntervention": 404, "UnknownProposal": 404,
    "UnknownChannel": 404, "UnknownContract": 404, "UnknownSource": 404,
    "UnknownAttribute": 404, "UnknownKind": 400, "InvalidId": 400,
    "InvalidValue": 400, "InvalidDictionary": 400, "MissingRationale": 400,
    "DuplicateId": 409, "DuplicateEdge": 409, "SelfLoop": 409,
    "ProposalInFlight": 409, "DuplicateOpinion": 409, "DuplicatePriority": 409,
    "DuplicateRule": 409, "DuplicateContract": 409, "MultipleArbiters": 409,
    "NoArbiter": 409, "InsufficientRights": 403, "InsufficientAuthority": 403,
    "NotArbiter": 403, "SelfReview": 403, "NotAnIndividual": 400,
    "ExceedsDelegator": 403, "ArbitrateToSource": 403, "ExpiredOnArrival": 400,
    "NotASource": 400, "NonTerminating": 409, "DerivationTypeError": 400,
    "AmbiguousOwnership": 400, "ScopeMismatch": 400, "WrongPeer": 403,
    "OwnershipViolation": 403, "NotInScope": 400, "PeerUnreachable": 503,
    "RateLimited": 429, "SnapshotStale": 409,
}


def _value_in(payload):
    """Accept either a tagged value or a bare JSON scalar."""
    if isinstance(payload, dict) and set(payload) == {"t", "v"}:
        return decode_value(payload)
    return coerce_value(payload)


def _page(rows: list, offset: int, limit: int) -> dict:
    return {"schema": SCHEMA, "total": len(rows), "offset": offset,
            "items": rows[offset:offset + limit]}


def create_app(hub: Hub) -> FastAPI:
    app = FastAPI(title="refhub", docs_url=None, redoc_url=None)
    app.state.hub = hub

    @app.exception_handler(HubError)
    async def _hub_error(request: Request, exc: HubError):
        return JSONResponse(status_code=_STATUS.get(exc.code, 400),
                            content={"schema": SCHEMA, "error": exc.code,
                                     "detail": str(exc)})

    # ------------------------------------------------------------- basics

    @app.get("/health")
    def health():
        return {"schema": SCHEMA, "status": "ok", "instance": hub.instance_id,
                "seq": hub.log.last_seq}

    @app.post("/sessions")
    def open_session(body: dict = Body(...)):
        return {"schema": SCHEMA, "token": hub.open_session(body["principal"])}

    # -------------------------------------------------------------- graph

    @app.get("/entities")
    def list_entities(offset: int = 0, limit: int = Query(100, le=1000)):
        rows = [{"id": e.id, "kind": e.kind.value, "attrs": e.attrs}
                for e in sorted(hub.entities.values(), key=lambda e: e.id)]
        return _page(rows, offset, limit)

    @app.post("/entities")
    def create_entity(body: dict = Body(...)):
        ent = hub.create_entity(body["kind"], body["id"],
                                {k: _value_in(v)
                                 for k, v in body.get("attrs", {}).items()})
        return {"schema": SCHEMA, "id": ent.id, "kind": ent.kind.value,
                "attrs": ent.attrs}

    @app.get("/entities/{entity_id}")
    def get_entity(entity_id: str):
        from .errors import UnknownEntity

        ent = hub.entities.get(entity_id)
        if ent is None:
            raise UnknownEntity(entity_id)
        return {"schema": SCHEMA, "id": ent.id, "kind": ent.kind.value,
                "attrs": ent.attrs,
                "parents": sorted(hub.parents.get(entity_id, set())),
                "children": sorted(hub.children.get(entity_id, set()))}

    @app.get("/connections")
    def list_connections(offset: int = 0, limit: int = Query(100, le=1000)):
        rows = [{"parent": c.parent, "child": c.child, "attrs": c.attrs,
                 "relevance_flag": c.relevance_flag}
                for _, c in sorted(hub.connections.items())]
        return _page(rows, offset, limit)

    @app.post("/connections")
    def create_connection(body: dict = Body(...)):
        conn = hub.connect(body["parent"], body["child"],
                           {k: _value_in(v)
                            for k, v in body.get("attrs", {}).items()},
                           bool(body.get("relevance_flag", False)))
        return {"schema": SCHEMA, "parent": conn.parent, "child": conn.child,
                "attrs": conn.attrs, "relevance_flag": conn.relevance_flag}

    @app.get("/golden/{datum}")
    def golden(datum: str):
        rec = hub.read_golden(datum)
        return {"schema": SCHEMA, **rec.to_json()}

    @app.get("/history/{datum}")
    def history(datum: str):
        return {"schema": SCHEMA, "datum": datum,
                "items": hub.datum_history(datum)}

    @app.get("/trail/{datum}")
    def trail(datum: str):
        return {"schema": SCHEMA, "datum": datum,
                "items": hub.audit_trail(datum)}

    # --------------------------------------------------------- derivations

    @app.get("/community/{entity_id}")
    def community(entity_id: str):
        return {"schema": SCHEMA, "entity": entity_id,
                "members": hub.community_of(entity_id)}

    @app.get("/collection/{entity_id}")
    def collection(entity_id: str):
        return {"schema": SCHEMA, "entity": entity_id,
                "datums": [str(d) for d in hub.collection_of(entity_id)]}

    @app.get("/visibility/{intervention_id}")
    def visibility_of(intervention_id: str):
        return {"schema": SCHEMA, "intervention": intervention_id,
                "individuals": hub.area_of_visibility(intervention_id)}

    @app.get("/field-of-action/{principal}")
    def field_of_action(principal: str, offset: int = 0,
                        limit: int = Query(500, le=5000)):
        return _page(hub.effective_rights(principal), offset, limit)

    @app.get("/rights/{principal}")
    def rights_of(principal: str, offset: int = 0,
                  limit: int = Query(500, le=5000)):
        return _page(hub.effective_rights(principal), offset, limit)

    @app.get("/rights/{principal}/{datum}")
    def right_on(principal: str, datum: str):
        return {"schema": SCHEMA, "principal": principal, "datum": datum,
                "right": hub.resolve_rights(principal, datum).name}

    # ------------------------------------------------------------ channels

    @app.get("/channels")
    def list_channels(offset: int = 0, limit: int = Query(100, le=1000)):
        rows = [dict(ch) for _, ch in sorted(hub.channels.items())]
        return _page(rows, offset, limit)

    @app.post("/channels")
    def configure_channel(body: dict = Body(...)):
        cid = hub.configure_channel(
            body["entity"], body.get("role_map", {}),
            bool(body.get("is_arbiter", False)),
            int(body.get("mobilized_level", 4)),
            body.get("grant_rules", ()), body.get("censor_rules", ()))
        return {"schema": SCHEMA, "channel": cid}

    @app.get("/arbiter/{datum}")
    def arbiter(datum: str):
        return {"schema": SCHEMA, "datum": datum,
                "channel": hub.arbiter_channel(datum)}

    @app.post("/adjustments")
    def adjustment(body: dict = Body(...)):
        jid = hub.apply_adjustment(kind=body["kind"], issuer=body["issuer"],
                                   target=body["target"], scope=body["scope"],
                                   level=body["level"], expiry=body.get("expiry"))
        return {"schema": SCHEMA, "adjustment": jid}

    @app.post("/delegations")
    def delegation(body: dict = Body(...)):
        did = hub.delegate(body["from"], body["to"], body["level"],
                           body["scope"], body.get("expiry"))
        return {"schema": SCHEMA, "delegation": did}

    # ------------------------------------------------------------ workflow

    @app.post("/warnings")
    def warn(body: dict = Body(...),
             x_session_token: Optional[str] = Header(None)):
        caller = hub.session_principal(x_session_token or "")
        if caller is None:
            raise InsufficientRights("a session token is required to warn")
        wid = hub.warn(body["datum"], body.get("note", ""), caller,
                       session=x_session_token)
        return {"schema": SCHEMA, "warning": wid, "datum": body["datum"],
                "reliability": hub.read_golden(body["datum"]).reliability.value}

    @app.post("/proposals")
    def propose(body: dict = Body(...)):
        pid = hub.propose(body["author"], body["datum"],
                          _value_in(body["value"]), body.get("rationale", ""))
        rec = hub.proposals.get(pid) or hub.forwards.get(pid)
        return {"schema": SCHEMA, "proposal": pid, "state": rec["state"]}

    @app.get("/proposals")
    def list_proposals(state: Optional[str] = None, offset: int = 0,
                       limit: int = Query(100, le=1000)):
        rows = [dict(p) for _, p in sorted(hub.proposals.items(),
                                           key=lambda kv: kv[1]["seq"])]
        if state:
            rows = [p for p in rows if p["state"] == state]
        return _page(rows, offset, limit)

    @app.get("/proposals/{proposal_id}")
    def get_proposal(proposal_id: str):
        from .errors import UnknownProposal

        prop = hub.proposals.get(proposal_id) or hub.forwards.get(proposal_id)
        if prop is None:
            raise UnknownProposal(proposal_id)
        return {"schema": SCHEMA, **prop}

    @app.post("/opinions")
    def opine(body: dict = Body(...)):
        oid = hub.opine(body["evaluator"], body["proposal"], body["verdict"],
                        body.get("rationale", ""))
        return {"schema": SCHEMA, "opinion": oid}

    @app.post("/arbitrations")
    def arbitrate(body: dict = Body(...)):
        aid = hub.arbitrate(body["arbiter"], body["proposal"], body["decision"],
                            body.get("rationale", ""))
        prop = hub.proposals[hub.arbitrations[aid]["proposal"]]
        return {"schema": SCHEMA, "arbitration": aid, "state": prop["state"]}

    @app.get("/review-queue/{principal}")
    def review_queue(principal: str, offset: int = 0,
                     limit: int = Query(100, le=1000)):
        return _page(hub.review_queue(principal), offset, limit)

    # ------------------------------------------------- rules and exosource

    @app.post("/rules")
    def register_rule(body: dict = Body(...)):
        rid = hub.register_rule(
            trigger_attr=body["trigger"]["attr"],
            entity_kind=body["trigger"].get("entity_kind"),
            edge_kind=body["trigger"].get("edge_kind"),
            direction=body.get("direction", "to-children"),
            target_attr=body["target_attr"], derivation=body["derivation"],
            priority=body["priority"], rule_id=body.get("id"))
        return {"schema": SCHEMA, "rule": rid}

    @app.post("/sources")
    def register_source(body: dict = Body(...)):
        sid = hub.register_source(body["source"], body["mappings"],
                                  int(body.get("version", 1)))
        return {"schema": SCHEMA, "source": sid}

    @app.post("/ingest")
    def ingest(body: dict = Body(...)):
        report = hub.ingest(body["source"], body["records"])
        return {"schema": SCHEMA, **report}

    @app.get("/rank")
    def rank(scope: Optional[str] = None, offset: int = 0,
             limit: int = Query(200, le=2000)):
        patterns = [scope] if scope else None
        return _page(hub.rank(patterns), offset, limit)

    # ---------------------------------------------------------- federation

    @app.post("/contracts")
    def establish(body: dict = Body(...)):
        contract = hub.establish_contract(body["id"], body["peer"],
                                          body["scope"], body["ownership"])
        return {"schema": SCHEMA, "contract": contract["id"]}

    @app.post("/sync/emit")
    def sync_emit(body: dict = Body(...)):
        cs = hub.emit_changeset(body["contract"], int(body.get("since", 0)))
        return Response(content=federation.encode_changeset(cs),
                        media_type="application/octet-stream")

    @app.post("/sync/apply")
    async def sync_apply(request: Request):
        cs = federation.decode_changeset(await request.body())
        report = hub.apply_changeset(cs["contract"], cs)
        return {"schema": SCHEMA, **report}

    @app.get("/sync/watermark/{contract_id}")
    def watermark(contract_id: str):
        federation._contract(hub, contract_id)
        return {"schema": SCHEMA, "contract": contract_id,
                "upto": hub.fed_received.get(contract_id, 0)}

    @app.post("/sync/forward")
    def receive_forward(body: dict = Body(...)):
        pid = federation.receive_forward(hub, body)
        return {"schema": SCHEMA, "proposal": pid}

    @app.post("/sync/check-scope")
    def scope_check(body: dict = Body(...)):
        return {"schema": SCHEMA,
                "missing": federation.check_scope(hub, body["scope"])}

    @app.post("/sync/run")
    def sync_run(body: dict = Body(...)):
        return {"schema": SCHEMA, **hub.sync_once(body["contract"])}

    @app.get("/digest/{contract_id}")
    def digest(contract_id: str):
        return {"schema": SCHEMA, "contract": contract_id,
                "digest": hub.scope_digest(contract_id)}

    return app


def build_hub(cfg) -> Hub:
    """Open the log (refusing a corrupt one), replay, attach startup inputs."""
    hub = Hub(cfg.instance_id, cfg.log_path, min_sample=cfg.min_sample)
    if cfg.rule_file:
        propagation.load_rules_file(hub, cfg.rule_file)
    for path in cfg.dictionary_files:
        exosource.load_dictionary_file(hub, path)
    for path in cfg.contract_files:
        _load_contract_file(hub, path)
    return hub


def _load_contract_file(hub: Hub, path: str) -> None:
    from .eventlog import parse_json

    with open(path, encoding="utf-8") as fh:
        doc = parse_json(fh.read())
    if doc.get("peer_url"):
        hub.links[doc["peer"]] = federation.HttpLink(doc["peer_url"])
    if doc["id"] not in hub.contracts:
        hub.establish_contract(doc["id"], doc["peer"], doc["scope"],
                               doc["ownership"])


def serve(cfg) -> None:
    """Run the instance until interrupted."""
    import socket

    import uvicorn

    hub = build_hub(cfg)
    app = create_app(hub)
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        probe.bind((cfg.host, cfg.port))
    except OSError as exc:
        raise PortUnavailable(f"cannot bind {cfg.listen}: {exc}") from exc
    finally:
        probe.close()
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="warning")
