"""Canonical demo graph used by tests, docs, and `load-fixture f1`.

Six entities, five edges: an authority (dean) constrains a structure (lab)
whose community is two individuals (alice the member, bob the manager); the
lab and alice both connect to a resource (server), the alice->server edge
flagged relevant; hrdb is an unconnected external source.
"""

def load_f1(hub) -> None:
    hub.create_entity("Authority", "dean", {"title": "dean of faculty"})
    hub.create_entity("Structure", "lab", {"budget": 0})
    hub.create_entity("Individual", "alice", {"email": "alice@example.org"})
    hub.create_entity("Individual", "bob", {"email": "bob@example.org"})
    hub.create_entity("Resource", "server", {"hostname": "srv1"})
    hub.create_entity("ExternalSource", "hrdb", {"endpoint": "hrdb.local"})
    hub.connect("dean", "lab", {"mandate": "research"})
    hub.connect("lab", "alice", {"role": "member"})
    hub.connect("lab", "bob", {"role": "manager"})
    hub.connect("lab", "server", {"quota": 150})
    hub.connect("alice", "server", {"login": "alice01"}, relevance_flag=True)


def configure_f1_channels(hub, manager_right: str = "Arbitrate") -> None:
    """Standard channel setup: the lab channel arbitrates its scope (members
    propose, managers evaluate or arbitrate), the server and dean channels
    ride along unflagged."""
    hub.configure_channel("lab", {"member": "Propose", "manager": manager_right},
                          is_arbiter=True)
    hub.configure_channel("server", {"member": "Evaluate"})
    hub.configure_channel("dean", {"overseer": "Arbitrate"})


FIXTURES = {"f1": load_f1}
