"""Deterministic table emission (CSV/JSON) and the per-run manifest."""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

ARTIFACT_NAME = "tlspulse"


def format_float(x: float) -> str:
    """Scientific notation with 9 significant digits; -0.0 normalized."""
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{float(x) + 0.0:.8e}"


def format_cell(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (int,)):
        return str(x)
    if isinstance(x, str):
        return x
    return format_float(x)


def write_table(path: Path, header: list[str], rows, fmt: str = "csv") -> Path:
    """Write rows under a unit-carrying header, as CSV or JSON records."""
    path = Path(path)
    if fmt == "csv":
        lines = [",".join(header)]
        lines.extend(",".join(format_cell(c) for c in row) for row in rows)
        path = path.with_suffix(".csv")
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    elif fmt == "json":
        records = [
            {k: (format_cell(c) if not isinstance(c, (int, str)) else c)
             for k, c in zip(header, row)}
            for row in rows
        ]
        path = path.with_suffix(".json")
        path.write_text(json.dumps(records, indent=1) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return path


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


@dataclass
class RunManifest:
    """Echo of the run: config, outputs with digests, timing."""

    command: str
    config: dict
    out_dir: Path
    figure: str = ""
    outputs: list[Path] = field(default_factory=list)
    _t0: float = field(default_factory=time.monotonic)

    def add(self, path: Path) -> None:
        self.outputs.append(Path(path))

    def write(self, version: str) -> Path:
        payload = {
            "artifact": ARTIFACT_NAME,
            "version": version,
            "command": self.command,
            "figure": self.figure,
            "config": self.config,
            "outputs": [
                {
                    "path": p.name,
                    "bytes": p.stat().st_size,
                    "sha256": _sha256(p),
                }
                for p in self.outputs
            ],
            "wall_clock_s": round(time.monotonic() - self._t0, 3),
            "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        }
        path = self.out_dir / "manifest.json"
        path.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")
        return path
