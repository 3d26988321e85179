"""Neighbor discovery: periodic broadcast probes answered by unicast
responses, local neighbor lists, and periodic reports to the server."""

from __future__ import annotations

import functools
import math
from collections.abc import Container, Mapping
from dataclasses import dataclass

from .core import NeighborRecord, NodeId, check_neighbor_entries
from .errors import InputError
from .radio import Position, RadioParams, rssi

WIFI_CHANNEL_MHZ = 2412.0


@dataclass(frozen=True)
class DiscoveryTimers:
    probe_interval: float = 2.0
    report_interval: float = 0.020
    staleness_rounds: int = 3
    probe_loss_prob: float = 0.0

    def __post_init__(self):
        if not (self.probe_interval > 0 and self.report_interval > 0 and self.staleness_rounds > 0):
            raise InputError("discovery timers must all be positive")
        if not 0.0 <= self.probe_loss_prob < 1.0:
            raise InputError(f"probe_loss_prob must be in [0, 1), got {self.probe_loss_prob}")

    @property
    def staleness_limit(self) -> float:
        return self.staleness_rounds * self.probe_interval


@dataclass(frozen=True)
class NeighborList:
    owner: NodeId
    entries: tuple[NeighborRecord, ...] = ()
    generated_at: float = 0.0

    def __post_init__(self):
        check_neighbor_entries(self.owner, self.entries)
        for rec in self.entries:
            if rec.last_seen > self.generated_at:
                raise InputError(f"entry for {rec.neighbor} seen after list generation time")

    def get(self, neighbor: NodeId) -> NeighborRecord | None:
        for rec in self.entries:
            if rec.neighbor == neighbor:
                return rec
        return None


@dataclass(frozen=True)
class ConnectivityUpdate:
    """Event consumed by the server: replaces its view of ``node`` wholesale."""

    node: NodeId
    entries: tuple[NeighborRecord, ...]
    at: float


@functools.cache
def addr_meta(node: NodeId) -> str:
    return f"10.42.0.{node + 1}/02:00:00:00:{node >> 8 & 0xFF:02x}:{node & 0xFF:02x}"


def run_probe_round(
    node: NodeId,
    positions: Mapping[NodeId, Position],
    params: RadioParams,
    now: float,
    nlist: NeighborList,
    *,
    responders: Container[NodeId] | None = None,
    loss_prob: float = 0.0,
    rng=None,
) -> NeighborList:
    """Broadcast one probe from ``node`` and fold the responses into its list.

    Every other node in range (and in ``responders``, when given) answers and
    is inserted or refreshed with ``last_seen = now``. Entries for nodes that
    did not answer keep their old timestamp; :func:`expire_stale` removes them.
    """
    if node not in positions:
        raise InputError(f"unknown node id {node}")
    here = positions[node]
    fresh: dict[NodeId, NeighborRecord] = {}
    for other in sorted(positions):
        if other == node or (responders is not None and other not in responders):
            continue
        level = rssi(here, positions[other], params)
        if level < params.rssi_floor:
            continue
        if loss_prob and rng is not None and rng.random() < loss_prob:
            continue
        fresh[other] = NeighborRecord(other, level, WIFI_CHANNEL_MHZ, addr_meta(other), now)
    merged = {rec.neighbor: rec for rec in nlist.entries}
    merged.update(fresh)
    entries = tuple(merged[n] for n in sorted(merged))
    return NeighborList(node, entries, max(now, nlist.generated_at))


def expire_stale(nlist: NeighborList, now: float, timers: DiscoveryTimers) -> NeighborList:
    limit = timers.staleness_limit
    kept = tuple(r for r in nlist.entries if not now - r.last_seen > limit)
    if len(kept) == len(nlist.entries):
        return nlist
    return NeighborList(nlist.owner, kept, nlist.generated_at)


def report_to_server(node: NodeId, nlist: NeighborList, now: float | None = None) -> ConnectivityUpdate:
    if nlist.owner != node:
        raise InputError(f"node {node} cannot report the list owned by {nlist.owner}")
    return ConnectivityUpdate(node, nlist.entries, nlist.generated_at if now is None else now)


def first_probe_time(node: NodeId, node_count: int, join_at: float, timers: DiscoveryTimers) -> float:
    """First slot of the node's staggered probe grid at or after ``join_at``.

    Node ``i`` probes at ``i * P / N + k * P``; stagger is deterministic.
    """
    period = timers.probe_interval
    phase = node * period / node_count
    k = max(0, math.ceil((join_at - phase) / period))
    t = phase + k * period
    if t < join_at:
        t += period
    return t
