"""Run reports: deterministic JSON artifacts plus wall-clock timings.

report.json is byte-identical across reruns with the same config and seeds,
so wall times stay out of the file (they are printed to stderr instead).
"""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path


def config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


@dataclass
class RunReport:
    command: str
    config: dict
    version: str
    outputs: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)
    status: str = "ok"
    error: dict | None = None

    def to_json(self) -> str:
        doc = {
            "tool": "wtf-lab",
            "version": self.version,
            "command": self.command,
            "config_hash": config_hash(self.config),
            "inputs": self.config,
            "outputs": self.outputs,
            "warnings": self.warnings,
            "status": self.status,
        }
        if self.error is not None:
            doc["error"] = self.error
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "report.json"
        with open(path, "w", newline="\n") as fh:
            fh.write(self.to_json())
        for name, seconds in self.timings.items():
            print(f"[wtf-lab] {self.command}:{name} took {seconds:.3f}s", file=sys.stderr)
        return path
