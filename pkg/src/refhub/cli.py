"""Operator CLI. Each subcommand maps 1:1 onto an API call and leaves the
same audit footprint; `--json` switches to machine-readable output."""

from __future__ import annotations

import sys
from datetime import date
from decimal import Decimal, InvalidOperation

import click

from .config import InstanceConfig, load_config, write_config
from .errors import HubError
from .eventlog import canonical_json
from .fixtures import FIXTURES
from .service import build_hub


def parse_cli_value(text: str):
    """integer, decimal, ISO date, else text"""
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return Decimal(text)
    except InvalidOperation:
        pass
    try:
        return date.fromisoformat(text)
    except ValueError:
        pass
    return text


class Ctx:
    def __init__(self, config_path: str, as_json: bool):
        self.config_path = config_path
        self.as_json = as_json
        self._hub = None

    @property
    def cfg(self) -> InstanceConfig:
        return load_config(self.config_path)

    @property
    def hub(self):
        if self._hub is None:
            self._hub = build_hub(self.cfg)
        return self._hub

    def emit(self, payload, lines=None):
        if self.as_json:
            click.echo(canonical_json(payload))
        else:
            for line in (lines if lines is not None else [str(payload)]):
                click.echo(line)


@click.group()
@click.option("--config", "config_path", default="refhub.json",
              show_default=True, help="Instance config file.")
@click.option("--json", "as_json", is_flag=True, help="Machine-readable output.")
@click.pass_context
def main(ctx, config_path, as_json):
    """Reference-data governance hub."""
    ctx.obj = Ctx(config_path, as_json)


def _run(ctx_obj, fn):
    try:
        fn()
    except HubError as exc:
        if ctx_obj.as_json:
            click.echo(canonical_json({"error": exc.code, "detail": str(exc)}))
        else:
            click.echo(f"error: {exc.code}: {exc}", err=True)
        sys.exit(1)


@main.command()
@click.option("--instance", default="hub", show_default=True)
@click.option("--log", "log_path", default="refhub.log", show_default=True)
@click.option("--listen", default="127.0.0.1:8435", show_default=True)
@click.pass_obj
def init(ctx, instance, log_path, listen):
    """Write a fresh instance config and an empty log."""
    cfg = InstanceConfig(instance_id=instance, log_path=log_path, listen=listen)
    write_config(ctx.config_path, cfg)
    build_hub(load_config(ctx.config_path)).log.close()
    ctx.emit({"config": ctx.config_path, "instance": instance},
             [f"initialized {instance} ({ctx.config_path})"])


@main.command("load-fixture")
@click.argument("name")
@click.pass_obj
def load_fixture(ctx, name):
    """Load a named demo graph into the instance."""
    def go():
        fn = FIXTURES.get(name)
        if fn is None:
            raise click.UsageError(f"unknown fixture: {name}")
        fn(ctx.hub)
        ctx.emit({"fixture": name, "entities": len(ctx.hub.entities),
                  "connections": len(ctx.hub.connections)},
                 [f"loaded {name}: {len(ctx.hub.entities)} entities, "
                  f"{len(ctx.hub.connections)} connections"])
    _run(ctx, go)


@main.command()
@click.argument("author")
@click.argument("datum")
@click.argument("value")
@click.option("--rationale", default="")
@click.pass_obj
def propose(ctx, author, datum, value, rationale):
    """Propose a new value for a datum."""
    def go():
        pid = ctx.hub.propose(author, datum, parse_cli_value(value), rationale)
        ctx.emit({"proposal": pid}, [pid])
    _run(ctx, go)


@main.command()
@click.argument("evaluator")
@click.argument("proposal")
@click.argument("verdict", type=click.Choice(["Support", "Object"]))
@click.option("--rationale", required=True)
@click.pass_obj
def opine(ctx, evaluator, proposal, verdict, rationale):
    """Record a reasoned opinion on an open proposal."""
    def go():
        oid = ctx.hub.opine(evaluator, proposal, verdict, rationale)
        ctx.emit({"opinion": oid}, [oid])
    _run(ctx, go)


@main.command()
@click.argument("arbiter")
@click.argument("proposal")
@click.argument("decision", type=click.Choice(["Accept", "Reject"]))
@click.option("--rationale", default="")
@click.pass_obj
def arbitrate(ctx, arbiter, proposal, decision, rationale):
    """Close a proposal; Accept commits a new golden version."""
    def go():
        aid = ctx.hub.arbitrate(arbiter, proposal, decision, rationale)
        ctx.emit({"arbitration": aid}, [aid])
    _run(ctx, go)


@main.command()
@click.argument("datum")
@click.argument("note")
@click.option("--caller", "--as", "caller", required=True,
              help="Checked for WARN rights, then discarded.")
@click.pass_obj
def warn(ctx, datum, note, caller):
    """File an anonymous warning against a datum."""
    def go():
        wid = ctx.hub.warn(datum, note, caller)
        ctx.emit({"warning": wid}, [wid])
    _run(ctx, go)


@main.command()
@click.argument("datum")
@click.pass_obj
def trail(ctx, datum):
    """Print the audit trail of a datum, one line per entry."""
    def go():
        items = ctx.hub.audit_trail(datum)
        lines = []
        for e in items:
            parts = [f"#{e['seq']}", e["kind"]]
            if "author" in e:
                parts.append(e["author"])
            if "version" in e:
                parts.append(f"v{e['version']}")
            if "value" in e:
                parts.append(f"= {e['value']['v']}")
            if e.get("rationale"):
                parts.append(f"({e['rationale']})")
            if e.get("note"):
                parts.append(f"({e['note']})")
            lines.append(" ".join(str(p) for p in parts))
        ctx.emit({"datum": datum, "items": items}, lines)
    _run(ctx, go)


@main.command()
@click.argument("principal")
@click.argument("datum", required=False)
@click.pass_obj
def rights(ctx, principal, datum):
    """Resolved rights: the full field of action, or one datum."""
    def go():
        if datum:
            level = ctx.hub.resolve_rights(principal, datum)
            ctx.emit({"principal": principal, "datum": datum,
                      "right": level.name}, [level.name])
        else:
            rows = ctx.hub.effective_rights(principal)
            ctx.emit({"principal": principal, "items": rows},
                     [f"{r['datum']}\t{r['right']}\t{r['reliability']}"
                      for r in rows])
    _run(ctx, go)


@main.command()
@click.option("--scope", default=None, help="Datum pattern to restrict ranking.")
@click.pass_obj
def rank(ctx, scope):
    """Agreement ranking of channels and sources."""
    def go():
        rows = ctx.hub.rank([scope] if scope else None)
        lines = []
        for r in rows:
            score = "unranked" if r["score"] is None else f"{r['score']:.2f}"
            lines.append(f"{r['subject']}\t{r['kind']}\t{score}\t"
                         f"{r['accepted']}/{r['arbitrated']}")
        ctx.emit({"items": rows}, lines)
    _run(ctx, go)


@main.command()
@click.option("--source", required=True)
@click.option("--file", "path", required=True, type=click.Path(exists=True))
@click.pass_obj
def ingest(ctx, source, path):
    """Ingest line-delimited records through the source's dictionary."""
    def go():
        from .exosource import read_records_file

        report = ctx.hub.ingest(source, read_records_file(path))
        ctx.emit(report,
                 [f"proposals: {len(report['proposals'])}, "
                  f"skipped: {len(report['skipped'])}, "
                  f"errors: {len(report['errors'])}"]
                 + [f"  error record {e['record']}: {e['reason']}"
                    for e in report["errors"]])
    _run(ctx, go)


@main.command()
@click.option("--contract", required=True)
@click.option("--once/--loop", default=True)
@click.option("--interval", default=5.0, show_default=True)
@click.pass_obj
def sync(ctx, contract, once, interval):
    """Exchange changesets with the contracted peer."""
    def go():
        import time as _time

        while True:
            report = ctx.hub.sync_once(contract)
            ctx.emit(report, [f"pulled {report['pulled']['applied']}, "
                              f"pushed {report['pushed']['applied']}, "
                              f"forwarded {report['forwarded']}"])
            if once:
                break
            _time.sleep(interval)
    _run(ctx, go)


@main.command()
@click.option("--contract", required=True)
@click.pass_obj
def digest(ctx, contract):
    """Order-independent digest of the contract's shared scope."""
    def go():
        d = ctx.hub.scope_digest(contract)
        ctx.emit({"contract": contract, "digest": d}, [d])
    _run(ctx, go)


@main.command()
@click.pass_obj
def serve(ctx):
    """Run the instance API until interrupted."""
    def go():
        from .service import serve as _serve

        _serve(ctx.cfg)
    _run(ctx, go)


if __name__ == "__main__":
    main()
