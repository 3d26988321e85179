"""Shared domain vocabulary: node ids, the server sentinel, the video and
the server-side content and connectivity maps."""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

from .errors import InputError

NodeId = int
PieceId = int


class _Server:
    """Sentinel source identity for the 3G seeder. Not a NodeId."""

    __slots__ = ()
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "SERVER"

    def __reduce__(self):
        return (_Server, ())


SERVER = _Server()


def canonical_order(a: NodeId, b: NodeId) -> int:
    """Three-way comparison used for every deterministic tie-break."""
    return (a > b) - (a < b)


@dataclass(frozen=True)
class VideoSpec:
    piece_count: int
    piece_size: int  # bytes
    bitrate: float  # bits/s

    def __post_init__(self):
        if self.piece_count < 1:
            raise InputError(f"piece_count must be >= 1, got {self.piece_count}")
        if self.piece_size <= 0:
            raise InputError(f"piece_size must be > 0, got {self.piece_size}")
        if not (self.bitrate > 0 and math.isfinite(self.bitrate)):
            raise InputError(f"bitrate must be > 0, got {self.bitrate}")

    @property
    def piece_duration(self) -> float:
        return self.piece_size * 8 / self.bitrate

    @property
    def duration(self) -> float:
        return self.piece_count * self.piece_duration

    @property
    def total_bytes(self) -> int:
        return self.piece_count * self.piece_size


@dataclass
class ContentMap:
    """Pieces held by each node. Holdings only ever grow."""

    piece_count: int
    holdings: dict[NodeId, set[PieceId]] = field(default_factory=dict)

    def add(self, node: NodeId, piece: PieceId) -> None:
        if not 0 <= piece < self.piece_count:
            raise InputError(f"piece {piece} outside 0..{self.piece_count - 1}")
        self.holdings.setdefault(node, set()).add(piece)

    def has_piece(self, node, piece: PieceId) -> bool:
        if node is SERVER:
            return True
        held = self.holdings.get(node)
        return held is not None and piece in held

    def snapshot(self) -> dict[NodeId, frozenset[PieceId]]:
        return {n: frozenset(p) for n, p in self.holdings.items()}


def has_piece(content: ContentMap, node, piece: PieceId) -> bool:
    return content.has_piece(node, piece)


@dataclass(frozen=True, slots=True)
class NeighborRecord:
    neighbor: NodeId
    rssi: float  # dBm
    frequency: float = 2412.0  # MHz, informational
    addr_meta: str = ""
    last_seen: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.rssi):
            raise InputError(f"rssi must be finite, got {self.rssi}")


def check_neighbor_entries(owner: NodeId, entries: Sequence[NeighborRecord]) -> None:
    seen = set()
    for rec in entries:
        if rec.neighbor == owner:
            raise InputError(f"node {owner} lists itself as a neighbor")
        if rec.neighbor in seen:
            raise InputError(f"node {owner} lists neighbor {rec.neighbor} twice")
        seen.add(rec.neighbor)


@dataclass
class ConnectivityMap:
    """Server view: the most recent neighbor list reported by each node.

    Symmetry is not assumed; A may hear B while B does not hear A.
    """

    view: dict[NodeId, tuple[NeighborRecord, ...]] = field(default_factory=dict)

    def replace(self, node: NodeId, entries: Iterable[NeighborRecord], *, trusted: bool = False) -> None:
        entries = tuple(entries)
        if not trusted:
            check_neighbor_entries(node, entries)
        self.view[node] = entries

    def neighbors(self, node: NodeId) -> tuple[NeighborRecord, ...]:
        return self.view.get(node, ())

    def as_dict(self) -> Mapping[NodeId, dict[NodeId, float]]:
        return {n: {r.neighbor: r.rssi for r in recs} for n, recs in self.view.items()}
