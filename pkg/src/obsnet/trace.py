"""NDJSON protocol trace: one line per announce/bid/award/execute/round event."""
from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

LEVELS = ("off", "info", "trace")
ENV_VAR = "OBSNET_LOG"


def level_from_env(default: str = "info") -> str:
    level = os.environ.get(ENV_VAR, default).strip().lower()
    if level not in LEVELS:
        raise ValueError(f"{ENV_VAR} must be one of {LEVELS}, got {level!r}")
    return level


def digest(payload: Any) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


class Trace:
    """In-memory event log. ``info`` keeps digests only, ``trace`` keeps payloads."""

    def __init__(self, level: str = "info"):
        if level not in LEVELS:
            raise ValueError(f"unknown trace level {level!r}")
        self.level = level
        self.lines: List[Dict[str, Any]] = []

    @property
    def enabled(self) -> bool:
        return self.level != "off"

    def emit(self, stage: str, contract_id: Optional[str], clock: int, payload: Dict[str, Any]) -> None:
        if not self.enabled:
            return
        line = {"seq": len(self.lines), "clock": clock, "stage": stage,
                "contract_id": contract_id, "digest": digest(payload)}
        if self.level == "trace":
            line["payload"] = payload
        self.lines.append(line)

    def stages(self) -> List[str]:
        return [ln["stage"] for ln in self.lines]

    def dumps(self) -> str:
        return "".join(json.dumps(ln, sort_keys=True, separators=(",", ":")) + "\n" for ln in self.lines)

    def write(self, path) -> None:
        Path(path).write_text(self.dumps())

    def file_digest(self) -> str:
        return hashlib.sha256(self.dumps().encode()).hexdigest()


def read_ndjson(path) -> Iterable[Dict[str, Any]]:
    with open(path) as fh:
        for line in fh:
            if line.strip():
                yield json.loads(line)
