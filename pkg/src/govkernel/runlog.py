"""Line-delimited run log: one header line, then one record per transition."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List

from .errors import GovKernelError

SCHEMA = "govkernel.runlog/1"


class CorruptLog(GovKernelError):
    pass


@dataclass
class RunLog:
    header: dict = field(default_factory=dict)
    records: List[dict] = field(default_factory=list)

    def append(self, rec: dict):
        rec = dict(rec)
        rec["index"] = len(self.records)
        self.records.append(rec)
        return rec

    def transitions(self):
        return [r for r in self.records if r["kind"] != "header"]

    def to_lines(self) -> str:
        head = dict(self.header, kind="header", schema=SCHEMA)
        lines = [json.dumps(head, sort_keys=True)]
        lines.extend(json.dumps(r, sort_keys=True) for r in self.records)
        return "".join(line + "\n" for line in lines)

    def save(self, path):
        Path(path).write_text(self.to_lines())

    @classmethod
    def from_lines(cls, text: str) -> "RunLog":
        lines = [line for line in text.splitlines() if line.strip()]
        if not lines:
            raise CorruptLog("empty run log")
        try:
            head = json.loads(lines[0])
            records = [json.loads(line) for line in lines[1:]]
        except json.JSONDecodeError as exc:
            raise CorruptLog(f"unparseable run log: {exc}") from None
        if head.get("schema") != SCHEMA:
            raise CorruptLog(f"unexpected schema {head.get('schema')!r}")
        head.pop("kind", None)
        head.pop("schema", None)
        log = cls(head, records)
        log.validate()
        return log

    @classmethod
    def load(cls, path) -> "RunLog":
        return cls.from_lines(Path(path).read_text())

    def validate(self):
        last_step = -1
        last_ext = 0
        for i, r in enumerate(self.records):
            for key in ("step", "kind", "act", "tags", "t_ext_len"):
                if key not in r:
                    raise CorruptLog(f"record {i} lacks {key!r}")
            if r["step"] <= last_step:
                raise CorruptLog(f"record {i}: step {r['step']} not strictly increasing")
            if r["t_ext_len"] < last_ext:
                raise CorruptLog(f"record {i}: t_ext length decreased")
            last_step = r["step"]
            last_ext = r["t_ext_len"]
