"""Instance configuration: one JSON file per hub instance."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .eventlog import parse_json, canonical_json


@dataclass
class InstanceConfig:
    instance_id: str = "hub"
    log_path: str = "refhub.log"
    listen: str = "127.0.0.1:8435"
    rule_file: str | None = None
    dictionary_files: list[str] = field(default_factory=list)
    contract_files: list[str] = field(default_factory=list)
    min_sample: int = 3

    @property
    def host(self) -> str:
        return self.listen.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.listen.rsplit(":", 1)[1])

    def to_json(self) -> dict:
        return {"instance_id": self.instance_id, "log_path": self.log_path,
                "listen": self.listen, "rule_file": self.rule_file,
                "dictionary_files": self.dictionary_files,
                "contract_files": self.contract_files,
                "min_sample": self.min_sample}


def load_config(path: str) -> InstanceConfig:
    with open(path, encoding="utf-8") as fh:
        doc = parse_json(fh.read())
    cfg = InstanceConfig(
        instance_id=doc.get("instance_id", "hub"),
        log_path=doc.get("log_path", "refhub.log"),
        listen=doc.get("listen", "127.0.0.1:8435"),
        rule_file=doc.get("rule_file"),
        dictionary_files=list(doc.get("dictionary_files", [])),
        contract_files=list(doc.get("contract_files", [])),
        min_sample=int(doc.get("min_sample", 3)),
    )
    base = os.path.dirname(os.path.abspath(path))
    cfg.log_path = _absolute(base, cfg.log_path)
    if cfg.rule_file:
        cfg.rule_file = _absolute(base, cfg.rule_file)
    cfg.dictionary_files = [_absolute(base, p) for p in cfg.dictionary_files]
    cfg.contract_files = [_absolute(base, p) for p in cfg.contract_files]
    return cfg


def write_config(path: str, cfg: InstanceConfig) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(cfg.to_json()) + "\n")


def _absolute(base: str, p: str) -> str:
    return p if os.path.isabs(p) else os.path.join(base, p)
