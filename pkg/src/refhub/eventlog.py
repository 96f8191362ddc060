"""Append-only event log: line-delimited JSON records, one ``{seq, kind, body}`` per line.

The log is the authoritative state. A file-backed log appends and flushes on
every record; ``path=None`` keeps the log in memory (tests, embedded use).

Startup rules:
  - trailing bytes without a newline terminator are a torn write from a crash
    and are dropped;
  - any newline-terminated line that fails to parse, or whose seq breaks the
    dense 1..N numbering, refuses to load (CorruptLog names the offending seq).

A log file may declare a rotation point with a first line
``{"start": S}``, meaning records 1..S-1 were archived elsewhere.
"""

from __future__ import annotations

import hashlib
import json
import os
from decimal import Decimal
from typing import Iterator, Optional

from .errors import CorruptLog


def canonical_json(obj) -> str:
    """Deterministic JSON used for log lines, digests, and snapshots."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False,
                      default=_encode_extra)


def _encode_extra(obj):
    if isinstance(obj, Decimal):
        return str(obj)
    raise TypeError(f"not JSON serializable: {obj!r}")


def parse_json(text: str):
    return json.loads(text, parse_float=Decimal)


class EventLog:
    """Dense, gapless sequence of records starting at ``start_seq``."""

    def __init__(self, path: Optional[str] = None):
        self.path = path
        self.start_seq = 1
        self._lines: list[str] = []  # serialized records, in seq order
        self._fh = None
        if path is not None:
            self._load(path)
            self._fh = open(path, "a", encoding="utf-8")

    def _load(self, path: str) -> None:
        if not os.path.exists(path):
            return
        with open(path, "rb") as fh:
            raw = fh.read()
        if not raw:
            return
        body, torn = raw, b""
        if not raw.endswith(b"\n"):
            # torn final write: keep only fully terminated records
            cut = raw.rfind(b"\n")
            body, torn = (raw[: cut + 1], raw[cut + 1 :]) if cut >= 0 else (b"", raw)
        expected = 1
        first = True
        for line in body.decode("utf-8").splitlines():
            if not line.strip():
                continue
            try:
                rec = parse_json(line)
            except Exception:
                raise CorruptLog(f"unparseable record at seq {expected}")
            if first and set(rec) == {"start"}:
                self.start_seq = int(rec["start"])
                expected = self.start_seq
                first = False
                continue
            first = False
            if rec.get("seq") != expected:
                raise CorruptLog(f"sequence break at seq {expected}")
            self._lines.append(line)
            expected += 1
        if torn and self._fh is None:
            # drop the partial tail on next append by truncating the file now
            with open(path, "wb") as fh:
                fh.write(body)

    @property
    def last_seq(self) -> int:
        return self.start_seq - 1 + len(self._lines)

    def append(self, kind: str, body: dict) -> int:
        seq = self.last_seq + 1
        line = canonical_json({"seq": seq, "kind": kind, "body": body})
        self._lines.append(line)
        if self._fh is not None:
            self._fh.write(line + "\n")
            self._fh.flush()
        return seq

    def records(self, since: int = 0) -> Iterator[dict]:
        """Yield parsed records with seq > since."""
        first = max(0, since - self.start_seq + 1)
        for line in self._lines[first:]:
            yield parse_json(line)

    def line(self, seq: int) -> str:
        return self._lines[seq - self.start_seq]

    def prefix_hash(self, upto: int) -> str:
        """Hash of records start_seq..upto, for snapshot/log agreement checks."""
        h = hashlib.sha256()
        for i in range(upto - self.start_seq + 1):
            h.update(self._lines[i].encode("utf-8"))
            h.update(b"\n")
        return h.hexdigest()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None
