"""Trace events and their line-delimited JSON encoding.

Every trace starts with a header object ``{"schema": "shapecalc-trace/1", ...}``
followed by one event object per line with at least ``time`` and ``kind``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO, Any, Sequence

from .geometry import Surface

SCHEMA = "shapecalc-trace/1"

KINDS = ("TimeStep", "Collision", "Bind", "WeakSplit", "StrongSplit", "Steer", "Deadlock")


def surface_json(s: Surface) -> dict:
    d: dict[str, Any] = {"patches": [[list(v) for v in p.vertices] for p in s.patches]}
    if s.label:
        d["label"] = s.label
    return d


def _num(x: float):
    return x if math.isfinite(x) else None


@dataclass(frozen=True)
class TraceEvent:
    time: float
    kind: str
    payload: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"time": _num(self.time), "kind": self.kind, **self.payload}


def time_step(t: float, dt: float) -> TraceEvent:
    return TraceEvent(t, "TimeStep", {"dt": dt})


def collision(t: float, a: int, b: int, surface: Surface, elastic: bool, names=None) -> TraceEvent:
    p = {"a": a, "b": b, "surface": surface_json(surface), "elastic": elastic}
    return TraceEvent(t, "Collision", p)


def bind(t: float, name: str, surface: Surface, ids: Sequence[int]) -> TraceEvent:
    return TraceEvent(t, "Bind", {"name": name, "surface": surface_json(surface), "ids": list(ids)})


def weak_split(t: float, name: str, surface: Surface, ids: Sequence[int]) -> TraceEvent:
    return TraceEvent(t, "WeakSplit", {"name": name, "surface": surface_json(surface), "ids": list(ids)})


def strong_split(t: float, channels, products) -> TraceEvent:
    """``channels``: (name, surface) pairs; ``products``: (ids, behaviours) per resulting process."""
    return TraceEvent(t, "StrongSplit", {
        "channels": [{"name": n, "surface": surface_json(s)} for n, s in channels],
        "products": [{"ids": list(ids), "behaviours": list(bs)} for ids, bs in products],
    })


def steer(t: float, pid: int, v) -> TraceEvent:
    return TraceEvent(t, "Steer", {"id": pid, "v": [float(c) for c in v]})


def deadlock(t: float, reason: str) -> TraceEvent:
    return TraceEvent(t, "Deadlock", {"reason": reason})


def dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


class TraceWriter:
    """Writes the header and events to a text stream, one JSON object per line."""

    def __init__(self, stream: IO[str], header: dict | None = None):
        self.stream = stream
        self.count = 0
        self.stream.write(dumps({"schema": SCHEMA, **(header or {})}) + "\n")

    def __call__(self, ev: TraceEvent):
        self.stream.write(dumps(ev.to_json()) + "\n")
        self.count += 1


def validate_line(line: str, first: bool = False) -> dict:
    """Parse one trace line and check it against the schema; raises ValueError."""
    obj = json.loads(line)
    if not isinstance(obj, dict):
        raise ValueError("trace line is not an object")
    if first:
        if obj.get("schema") != SCHEMA:
            raise ValueError("missing or unknown schema header")
        return obj
    if obj.get("kind") not in KINDS:
        raise ValueError(f"unknown event kind {obj.get('kind')!r}")
    if not isinstance(obj.get("time"), (int, float)):
        raise ValueError("event time missing")
    need = {
        "TimeStep": ("dt",), "Collision": ("a", "b", "surface", "elastic"), "Bind": ("name", "surface", "ids"),
        "WeakSplit": ("name", "surface", "ids"), "StrongSplit": ("channels", "products"),
        "Steer": ("id", "v"), "Deadlock": ("reason",),
    }[obj["kind"]]
    for k in need:
        if k not in obj:
            raise ValueError(f"{obj['kind']} event lacks {k!r}")
    return obj
