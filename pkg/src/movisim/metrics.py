"""Run reports, the offload (3G capacity improvement) figure, and
side-by-side comparison of two runs."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any

from .errors import InputError

SCHEMA_VERSION = 1


@dataclass
class NodeRecord:
    node: int
    joined_at: float
    bytes_from_server: int = 0
    bytes_from_peers: int = 0
    bytes_uploaded: int = 0
    startup_delay: float | None = None
    stall_count: int = 0
    stall_total: float = 0.0
    completed: bool = False
    completed_at: float | None = None
    final_playhead: float = 0.0


@dataclass
class Report:
    mode: str
    seed: int
    nodes: list[NodeRecord]
    server_bytes: int
    peer_bytes: int
    improvement: float | None
    run_duration: float
    truncated: bool
    decisions: list[dict[str, Any]] = field(default_factory=list)
    transfers: list[dict[str, Any]] = field(default_factory=list)
    config: dict[str, Any] = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Report:
        d = dict(d)
        d["nodes"] = [NodeRecord(**n) for n in d["nodes"]]
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> Report:
        return cls.from_dict(json.loads(text))

    @property
    def total_bytes(self) -> int:
        return self.server_bytes + self.peer_bytes

    def mean_startup_delay(self) -> float | None:
        vals = [n.startup_delay for n in self.nodes if n.startup_delay is not None]
        return sum(vals) / len(vals) if vals else None

    def mean_stall_total(self) -> float:
        return sum(n.stall_total for n in self.nodes) / len(self.nodes) if self.nodes else 0.0


def offload_fraction(server_bytes: int, peer_bytes: int) -> float | None:
    total = server_bytes + peer_bytes
    if total == 0:
        return None
    return peer_bytes / total


def improvement(report: Report) -> float | None:
    """Share of delivered bytes carried over ad-hoc Wi-Fi instead of 3G.

    The server-only baseline carries every byte, so this is also the
    relative reduction in server/3G load. ``None`` when nothing was delivered.
    """
    return offload_fraction(report.server_bytes, report.peer_bytes)


def summarize_transfers(transfers: list[dict[str, Any]]) -> tuple[int, int]:
    server = sum(t["bytes"] for t in transfers if t["source"] == "server")
    peer = sum(t["bytes"] for t in transfers if t["source"] != "server")
    return server, peer


def _delta(a: float | None, b: float | None) -> float | None:
    if a is None or b is None:
        return None
    return b - a


def compare(a: Report, b: Report) -> dict[str, Any]:
    """Deltas from ``a`` to ``b``; both runs must share a scenario apart from mode."""
    strip = lambda cfg: {k: v for k, v in cfg.items() if k != "mode"}
    if strip(a.config) != strip(b.config):
        raise InputError("reports come from different scenarios")
    rows = {}
    for name, get in (
        ("server_bytes", lambda r: r.server_bytes),
        ("peer_bytes", lambda r: r.peer_bytes),
        ("improvement", lambda r: r.improvement or 0.0),
        ("mean_startup_delay", Report.mean_startup_delay),
        ("mean_stall_total", Report.mean_stall_total),
    ):
        va, vb = get(a), get(b)
        rows[name] = {"a": va, "b": vb, "delta": _delta(va, vb)}
    return {
        "a": {"mode": a.mode, "seed": a.seed},
        "b": {"mode": b.mode, "seed": b.seed},
        "metrics": rows,
        "config": a.config,
    }


def mean(values) -> float:
    values = list(values)
    if not values:
        return math.nan
    return math.fsum(values) / len(values)
