"""Server-side piece scheduling.

For every piece request the server narrows the requester's reported
neighbors to those holding the piece, then to trusted ones, then to those
heard above the RSSI threshold, then to idle ones, and picks the survivor
with the largest remaining buffer time. With no survivor the server itself
delivers the piece over 3G.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import NamedTuple

from .core import SERVER, ConnectivityMap, ContentMap, NeighborRecord, NodeId, PieceId
from .errors import InputError, ProtocolError
from .trust import TrustState

GROUPING_POLICIES = ("global", "components")


class Audit(NamedTuple):
    """Candidates surviving each filter stage, in pipeline order."""

    neighbors: int
    have_piece: int
    trusted: int
    rssi_ok: int
    idle: int


@dataclass(frozen=True)
class ScheduleDecision:
    requester: NodeId
    piece: PieceId
    source: object  # NodeId or SERVER
    audit: Audit | None = None
    rbt: float | None = None
    at: float = 0.0

    @property
    def peer(self) -> NodeId | None:
        return None if self.source is SERVER else self.source


@dataclass
class ServerState:
    connectivity: ConnectivityMap
    content: ContentMap
    trust: TrustState = field(default_factory=TrustState)
    busy: set[NodeId] = field(default_factory=set)
    rssi_threshold: float = -75.0
    rbt_view: Mapping[NodeId, float] = field(default_factory=dict)
    grouping: str = "global"

    def __post_init__(self):
        if self.grouping not in GROUPING_POLICIES:
            raise InputError(f"unknown grouping policy {self.grouping!r}")

    def apply_connectivity_report(self, node: NodeId, entries: Iterable[NeighborRecord]) -> ServerState:
        entries = getattr(entries, "entries", entries)
        self.connectivity.replace(node, entries)
        return self

    def apply_content_update(self, node: NodeId, piece: PieceId) -> ServerState:
        self.content.add(node, piece)
        return self

    def mark_busy(self, node: NodeId) -> ServerState:
        self.busy.add(node)
        return self

    def mark_idle(self, node: NodeId) -> ServerState:
        if node not in self.busy:
            raise ProtocolError(f"mark_idle on node {node} which is not busy")
        self.busy.remove(node)
        return self

    def rbt_of(self, node: NodeId) -> float:
        return self.rbt_view.get(node, 0.0)


def schedule_piece(state: ServerState, requester: NodeId, piece: PieceId, at: float = 0.0) -> ScheduleDecision:
    if requester in state.busy:
        raise ProtocolError(f"node {requester} requested piece {piece} while busy")
    content = state.content
    if content.has_piece(requester, piece):
        raise ProtocolError(f"node {requester} requested piece {piece} it already holds")

    neighbors = state.connectivity.neighbors(requester)
    holding = [r for r in neighbors if content.has_piece(r.neighbor, piece)]
    trusted = [r for r in holding if state.trust.is_schedulable(r.neighbor)]
    strong = [r for r in trusted if r.rssi >= state.rssi_threshold]
    busy = state.busy
    idle = [r.neighbor for r in strong if r.neighbor not in busy]
    audit = Audit(len(neighbors), len(holding), len(trusted), len(strong), len(idle))

    if not idle:
        return ScheduleDecision(requester, piece, SERVER, audit, None, at)
    rbt_view = state.rbt_view
    best = None
    best_rbt = 0.0
    for n in idle:
        r = rbt_view.get(n, 0.0)
        if best is None or r > best_rbt or (r == best_rbt and n < best):
            best, best_rbt = n, r
    return ScheduleDecision(requester, piece, best, audit, best_rbt, at)


def apply_connectivity_report(state: ServerState, node: NodeId, entries) -> ServerState:
    return state.apply_connectivity_report(node, entries)


def apply_content_update(state: ServerState, node: NodeId, piece: PieceId) -> ServerState:
    return state.apply_content_update(node, piece)


def mark_busy(state: ServerState, node: NodeId) -> ServerState:
    return state.mark_busy(node)


def mark_idle(state: ServerState, node: NodeId) -> ServerState:
    return state.mark_idle(node)


def assign_group(state: ServerState, nodes: Iterable[NodeId]) -> list[frozenset[NodeId]]:
    """Partition ``nodes`` into ad-hoc groups, ordered by lowest member id.

    ``global`` puts everyone in one group. ``components`` links two nodes when
    each lists the other in its latest report and returns the connected
    components of that graph.
    """
    nodes = sorted(set(nodes))
    if not nodes:
        return []
    if state.grouping == "global":
        return [frozenset(nodes)]

    parent = {n: n for n in nodes}

    def find(n):
        while parent[n] != n:
            parent[n] = parent[parent[n]]
            n = parent[n]
        return n

    heard = {n: {r.neighbor for r in state.connectivity.neighbors(n)} for n in nodes}
    for a in nodes:
        for b in heard[a]:
            if b in parent and a in heard[b]:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    groups: dict[NodeId, set[NodeId]] = {}
    for n in nodes:
        groups.setdefault(find(n), set()).add(n)
    return [frozenset(g) for _, g in sorted(groups.items())]


def group_label(groups: list[frozenset[NodeId]], node: NodeId) -> str:
    for g in groups:
        if node in g:
            return f"g{min(g)}"
    return f"g{node}"
