"""refhub: a reference-data governance hub.

Golden records over an entity-connection graph, graph-derived visibility and
rights, multi-channel change workflows with unique arbitration, rule-based
propagation, external-source ingestion with agreement ranking, and
contract-scoped synchronization between instances.
"""

from .errors import HubError
from .hub import Hub
from .model import DatumRef, EntityKind, GoldenRecord, Reliability, Token
from .rights import Right

__all__ = ["Hub", "HubError", "DatumRef", "EntityKind", "GoldenRecord",
           "Reliability", "Right", "Token"]

__version__ = "0.1.0"
