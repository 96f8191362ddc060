"""Core domain types: entities, connections, datum references, golden records.

Values are restricted to five scalar types (text, integer, decimal, date,
enum token). Decimals use :class:`decimal.Decimal` so that serialization and
replay are exact; floats are rejected everywhere.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import date
from decimal import Decimal
from enum import Enum
from typing import Union

from .errors import InvalidId, InvalidValue, UnknownDatum


class EntityKind(str, Enum):
    INDIVIDUAL = "Individual"
    RESOURCE = "Resource"
    STRUCTURE = "Structure"
    PRODUCT = "Product"
    EXTERNAL_SOURCE = "ExternalSource"
    AUTHORITY = "Authority"


class Reliability(str, Enum):
    UNVERIFIED = "Unverified"
    PROPOSED = "Proposed"
    CONTESTED = "Contested"
    GOLDEN = "Golden"


class Token(str):
    """Enum-token value: a string drawn from a controlled vocabulary."""

    __slots__ = ()


Value = Union[str, int, Decimal, date, Token]

_ID_RE = re.compile(r"^[A-Za-z0-9_-]+$")


def check_id(raw: str, what: str = "id") -> str:
    if not isinstance(raw, str) or not _ID_RE.match(raw):
        raise InvalidId(f"invalid {what}: {raw!r}")
    return raw


def value_tag(v: Value) -> str:
    if isinstance(v, Token):
        return "token"
    if isinstance(v, bool):  # bool is an int subclass; not a supported type
        raise InvalidValue(f"unsupported value type: {v!r}")
    if isinstance(v, str):
        return "text"
    if isinstance(v, int):
        return "integer"
    if isinstance(v, Decimal):
        return "decimal"
    if isinstance(v, date):
        return "date"
    raise InvalidValue(f"unsupported value type: {v!r}")


def encode_value(v: Value) -> dict:
    """Tagged wire form, exact under round-trip."""
    tag = value_tag(v)
    if tag == "integer":
        return {"t": tag, "v": v}
    if tag == "decimal":
        return {"t": tag, "v": str(v)}
    if tag == "date":
        return {"t": tag, "v": v.isoformat()}
    return {"t": tag, "v": str(v)}


def decode_value(d: dict) -> Value:
    tag, raw = d["t"], d["v"]
    if tag == "text":
        return raw
    if tag == "token":
        return Token(raw)
    if tag == "integer":
        return int(raw)
    if tag == "decimal":
        return Decimal(raw)
    if tag == "date":
        return date.fromisoformat(raw)
    raise InvalidValue(f"unknown value tag: {tag!r}")


def coerce_value(v) -> Value:
    """Accept values from JSON payloads: floats become exact decimals."""
    if isinstance(v, bool):
        raise InvalidValue("boolean values are not supported")
    if isinstance(v, float):
        return Decimal(str(v))
    if isinstance(v, (str, int, Decimal, date)):
        return v
    raise InvalidValue(f"unsupported value: {v!r}")


@dataclass(frozen=True, order=True)
class DatumRef:
    """Address of one datum: an entity attribute or a connection attribute.

    Canonical text form is ``entity.attr`` or ``parent->child.attr``.
    """

    parent: str
    child: str  # empty for entity datums
    attr: str

    @staticmethod
    def entity(entity_id: str, attr: str) -> "DatumRef":
        return DatumRef(entity_id, "", attr)

    @staticmethod
    def connection(parent: str, child: str, attr: str) -> "DatumRef":
        return DatumRef(parent, child, attr)

    @property
    def is_connection(self) -> bool:
        return bool(self.child)

    def __str__(self) -> str:
        if self.child:
            return f"{self.parent}->{self.child}.{self.attr}"
        return f"{self.parent}.{self.attr}"

    @staticmethod
    def parse(text: str) -> "DatumRef":
        head, sep, attr = text.rpartition(".")
        if not sep or not head or not attr:
            raise UnknownDatum(f"malformed datum reference: {text!r}")
        if "->" in head:
            parent, _, child = head.partition("->")
            if not parent or not child:
                raise UnknownDatum(f"malformed datum reference: {text!r}")
            return DatumRef(parent, child, attr)
        return DatumRef(head, "", attr)


@dataclass
class Entity:
    id: str
    kind: EntityKind
    attrs: list[str] = field(default_factory=list)  # specific attribute names
    created_seq: int = 0


@dataclass
class Connection:
    parent: str
    child: str
    attrs: list[str] = field(default_factory=list)  # connection attribute names
    relevance_flag: bool = False
    created_seq: int = 0


@dataclass
class GoldenRecord:
    """One committed version of a datum's authoritative value."""

    datum: DatumRef
    value: Value
    version: int
    reliability: Reliability
    committed_by: str  # record id of the committing act
    committed_at: str  # wall clock, stored but never decisive
    seq: int  # log seq of the committing record

    def to_json(self) -> dict:
        return {
            "datum": str(self.datum),
            "value": encode_value(self.value),
            "version": self.version,
            "reliability": self.reliability.value,
            "committed_by": self.committed_by,
            "committed_at": self.committed_at,
            "seq": self.seq,
        }


class InterventionKind(str, Enum):
    PROPOSAL = "Proposal"
    OPINION = "Opinion"
    ARBITRATION = "Arbitration"


@dataclass
class Intervention:
    """A traceable authored act. Warnings are a separate, author-free record."""

    id: str
    kind: InterventionKind
    datum: DatumRef
    author: str
    channel: str  # concerned/arbiter channel entity id, "" if none recorded
    payload: dict
    rationale: str
    at: float
    seq: int
