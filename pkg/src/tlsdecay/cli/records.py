"""Run records and their on-disk form: one CSV per curve plus a JSON metadata file."""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np

from .. import __version__


def plain(obj):
    """Recursively convert numpy scalars/arrays and tuples to JSON-native types."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def fmt(x: float) -> str:
    # 17 significant digits round-trips every double exactly
    return format(float(x), ".17g")


@dataclass
class Curve:
    solver: str
    knob: str
    value: float
    x: list
    y: list
    x_name: str = "t"
    y_name: str = "P"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.value = float(self.value)
        self.x = [float(v) for v in np.asarray(self.x, dtype=float)]
        self.y = [float(v) for v in np.asarray(self.y, dtype=float)]
        self.params = plain(self.params)

    @classmethod
    def from_trace(cls, trace, knob: str, value: float) -> "Curve":
        return cls(trace.solver, knob, value, trace.times, trace.values, params=trace.params)

    @property
    def filename_stem(self) -> str:
        return f"{self.solver}_{self.knob}={self.value:g}"

    def to_dict(self) -> dict:
        return {"solver": self.solver, "knob": self.knob, "value": self.value, "x_name": self.x_name,
                "y_name": self.y_name, "x": self.x, "y": self.y, "params": self.params}

    @classmethod
    def from_dict(cls, d: dict) -> "Curve":
        return cls(d["solver"], d["knob"], d["value"], d["x"], d["y"], d["x_name"], d["y_name"], d["params"])


@dataclass
class RunRecord:
    command: str
    config: dict
    curves: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    duration_s: float = 0.0
    run_id: str = field(default_factory=lambda: uuid.uuid4().hex[:12])
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))
    version: str = __version__

    def __post_init__(self):
        self.config = plain(self.config)
        self.diagnostics = plain(self.diagnostics)

    def to_dict(self) -> dict[str, Any]:
        return {
            "run_id": self.run_id,
            "timestamp": self.timestamp,
            "version": self.version,
            "command": self.command,
            "config": self.config,
            "curves": [c.to_dict() for c in self.curves],
            "diagnostics": self.diagnostics,
            "duration_s": self.duration_s,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunRecord":
        return cls(command=d["command"], config=d["config"],
                   curves=[Curve.from_dict(c) for c in d["curves"]],
                   diagnostics=d["diagnostics"], duration_s=d["duration_s"],
                   run_id=d["run_id"], timestamp=d["timestamp"], version=d["version"])

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False)

    @classmethod
    def loads(cls, text: str) -> "RunRecord":
        return cls.from_dict(json.loads(text))


def curve_csv(curve: Curve) -> str:
    lines = [f"{curve.x_name},{curve.y_name}"]
    lines += [f"{fmt(a)},{fmt(b)}" for a, b in zip(curve.x, curve.y)]
    return "\n".join(lines) + "\n"


def read_csv(path) -> tuple[list[str], np.ndarray, np.ndarray]:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    header = text[0].split(",")
    rows = np.array([[float(v) for v in line.split(",")] for line in text[1:]]).reshape(-1, 2)
    return header, rows[:, 0], rows[:, 1]


def write_outputs(record: RunRecord, out_dir) -> list[Path]:
    """Write ``<run_id>_<solver>_<knob>=<value>.csv`` per curve and ``<run_id>_record.json``.

    Files are written one after another; on failure the ones already written are removed.
    """
    out = Path(out_dir)
    written: list[Path] = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for curve in record.curves:
            path = out / f"{record.run_id}_{curve.filename_stem}.csv"
            if path in written:
                raise ValueError(f"duplicate output name {path.name}")
            path.write_text(curve_csv(curve), encoding="utf-8")
            written.append(path)
        meta = out / f"{record.run_id}_record.json"
        meta.write_text(record.dumps(), encoding="utf-8")
        written.append(meta)
    except OSError as exc:
        for p in written:
            p.unlink(missing_ok=True)
        raise OSError(f"failed writing outputs to {exc.filename or out}: {exc.strerror}") from exc
    except Exception:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    return written
