"""Writers serialize on the hub lock; readers see committed snapshots."""

import threading

from refhub import Hub
from refhub.errors import HubError
from refhub.fixtures import configure_f1_channels, load_f1


def test_concurrent_writers_keep_log_dense():
    hub = Hub("mt")
    load_f1(hub)
    configure_f1_channels(hub)
    datums = ["lab.budget", "lab->server.quota", "dean->lab.mandate",
              "lab->alice.role", "lab->bob.role", "alice->server.login"]
    errors = []

    def writer(idx):
        try:
            for i in range(20):
                d = datums[(idx + i) % len(datums)]
                try:
                    tag = hub.datum_tag[hub.resolve_datum(d)]
                    value = i if tag == "integer" else f"w{idx}-{i}"
                    pid = hub.propose("alice" if idx % 2 else "bob", d, value, "mt")
                    hub.arbitrate("bob", pid, "Accept", "mt")
                except HubError:
                    pass
        except Exception as exc:  # pragma: no cover - failure reporting
            errors.append(exc)

    def reader():
        try:
            for _ in range(200):
                hub.read_golden("lab.budget")
                hub.field_of_action("alice")
        except Exception as exc:  # pragma: no cover
            errors.append(exc)

    threads = [threading.Thread(target=writer, args=(i,)) for i in range(6)]
    threads += [threading.Thread(target=reader) for _ in range(3)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    seqs = [rec["seq"] for rec in hub.log.records()]
    assert seqs == list(range(1, len(seqs) + 1))
    # replay agrees with live state after the melee
    fresh = Hub("mt")
    for rec in hub.log.records():
        fresh.log.append(rec["kind"], rec["body"])
        fresh._apply(rec["seq"], rec["kind"], rec["body"])
    assert fresh.state_digest() == hub.state_digest()


def test_interventions_visible_to_whole_area():
    hub = Hub("vis")
    load_f1(hub)
    configure_f1_channels(hub)
    pid = hub.propose("alice", "lab->server.quota", 120, "bump")
    datum = hub.proposals[pid]["datum"]
    for member in hub.area_of_visibility(pid):
        assert any(str(d) == datum for d in hub.field_of_action(member))
        assert any(e.get("id") == pid for e in hub.audit_trail(datum))
