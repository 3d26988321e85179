"""Deterministic discrete-event engine.

Events are ordered by ``(time, kind, node, sequence)``; ``kind`` values double
as the tie-break rank at equal timestamps, so a scenario and seed fully
determine the run.
"""

from __future__ import annotations

import heapq
import logging
import math
import zlib
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Any, NamedTuple

import numpy as np

from . import client as cl
from .core import SERVER, ConnectivityMap, ContentMap, NodeId, PieceId, VideoSpec
from .discovery import DiscoveryTimers, NeighborList, expire_stale, first_probe_time, run_probe_round
from .errors import ConfigError, InputError, ProtocolError
from .metrics import NodeRecord, Report, offload_fraction
from .radio import Position, RadioParams, Trajectory, wifi_rate
from .scheduler import GROUPING_POLICIES, ScheduleDecision, ServerState, assign_group, group_label, schedule_piece
from .trust import TrustEvaluation, TrustState

log = logging.getLogger(__name__)

MODES = ("server-only", "p2p")


class Kind(IntEnum):
    NODE_JOIN = 0
    TRANSFER_COMPLETE = 1
    PIECE_REQUEST = 2
    REPORT_TICK = 3
    PROBE_ROUND = 4
    PLAYOUT_TICK = 5
    TRUST_EVENT = 6


class Event(NamedTuple):
    at: float
    kind: Kind
    node: int
    seq: int
    payload: Any = None


@dataclass(frozen=True)
class Transfer:
    id: int
    source: object  # NodeId or SERVER
    dest: NodeId
    piece: PieceId
    started: float
    duration: float
    bytes: int
    group: str | None = None

    @property
    def end(self) -> float:
        return self.started + self.duration

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "source": "server" if self.source is SERVER else self.source,
            "dest": self.dest,
            "piece": self.piece,
            "start": self.started,
            "end": self.end,
            "bytes": self.bytes,
            "group": self.group,
        }


def rng_stream(seed: int, label: str) -> np.random.Generator:
    """Independent reproducible stream for ``(seed, label)``."""
    key = zlib.crc32(label.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(key,)))


@dataclass
class Scenario:
    node_count: int = 30
    video: VideoSpec = field(default_factory=lambda: VideoSpec(60, 262144, 524288.0))
    radio: RadioParams = field(default_factory=RadioParams)
    timers: DiscoveryTimers = field(default_factory=DiscoveryTimers)
    square_side: float | None = 50.0
    positions: list[tuple[float, float]] | None = None
    waypoints: list[list[tuple[float, float, float]]] | None = None
    start_offsets: list[float] | None = None
    offset_range: tuple[float, float] = (0.0, 120.0)
    trust_events: list[TrustEvaluation] = field(default_factory=list)
    trust_threshold: float = 0.5
    default_trust: float = 1.0
    sticky_blacklist: bool = False
    rssi_threshold: float = -75.0
    grouping: str = "global"
    prebuffer: float | None = None  # seconds; None means one piece
    high_watermark: float = 30.0
    pipeline_depth: int = 1
    mode: str = "p2p"
    seed: int = 0
    duration_cap: float = 3600.0

    def __post_init__(self):
        self.validate()

    @property
    def prebuffer_s(self) -> float:
        return self.video.piece_duration if self.prebuffer is None else self.prebuffer

    def validate(self) -> None:
        n = self.node_count
        if not isinstance(n, int) or n < 1:
            raise ConfigError(f"node_count must be an integer >= 1, got {n!r}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.grouping not in GROUPING_POLICIES:
            raise ConfigError(f"grouping must be one of {GROUPING_POLICIES}, got {self.grouping!r}")
        layouts = [x is not None for x in (self.positions, self.waypoints)]
        if sum(layouts) > 1:
            raise ConfigError("give at most one of positions / waypoints")
        if self.positions is not None and len(self.positions) != n:
            raise ConfigError(f"positions lists {len(self.positions)} nodes, node_count is {n}")
        if self.waypoints is not None and len(self.waypoints) != n:
            raise ConfigError(f"waypoints lists {len(self.waypoints)} nodes, node_count is {n}")
        if self.positions is None and self.waypoints is None:
            if self.square_side is None or not self.square_side > 0:
                raise ConfigError("layout needs a positive square_side_m, positions or waypoints")
        if self.start_offsets is not None:
            if len(self.start_offsets) != n:
                raise ConfigError(f"start_offsets lists {len(self.start_offsets)} nodes, node_count is {n}")
            if any(not (o >= 0 and math.isfinite(o)) for o in self.start_offsets):
                raise ConfigError("start offsets must be finite and >= 0")
        lo, hi = self.offset_range
        if not 0 <= lo <= hi:
            raise ConfigError(f"offset_range must satisfy 0 <= lo <= hi, got {self.offset_range}")
        for i, ev in enumerate(self.trust_events):
            for who in (ev.evaluator, ev.subject):
                if not 0 <= who < n:
                    raise ConfigError(f"trust_events[{i}] references node {who}, node_count is {n}")
            if ev.at < 0:
                raise ConfigError(f"trust_events[{i}] has negative time {ev.at}")
        if not 0 <= self.trust_threshold <= 1:
            raise ConfigError(f"trust_threshold must be in [0, 1], got {self.trust_threshold}")
        if self.rssi_threshold < self.radio.rssi_floor:
            raise ConfigError("rssi_threshold_dbm must not lie below the radio rssi_floor_dbm")
        if self.pipeline_depth != 1:
            raise ConfigError("pipeline_depth other than 1 is not supported: nodes are half-duplex")
        if not self.duration_cap > 0:
            raise ConfigError(f"duration_cap must be > 0, got {self.duration_cap}")
        try:
            cl.check_prebuffer(self.prebuffer_s, self.high_watermark)
        except InputError as exc:
            raise ConfigError(str(exc)) from None

    def resolve_offsets(self) -> list[float]:
        if self.start_offsets is not None:
            return [float(o) for o in self.start_offsets]
        lo, hi = self.offset_range
        draws = rng_stream(self.seed, "offsets").uniform(lo, hi, size=self.node_count)
        return [float(x) for x in draws]

    def resolve_trajectories(self) -> list[Trajectory]:
        if self.waypoints is not None:
            return [Trajectory(w) for w in self.waypoints]
        if self.positions is not None:
            pts = self.positions
        else:
            side = self.square_side
            pts = rng_stream(self.seed, "layout").uniform(0.0, side, size=(self.node_count, 2)).tolist()
        return [Trajectory([(0.0, float(x), float(y))]) for x, y in pts]


def flash_crowd(node_count: int = 30, seed: int = 0, **overrides) -> Scenario:
    """The default stadium-style scenario: uniform positions in a 50 m square,
    joins spread uniformly over the first two minutes."""
    return Scenario(node_count=node_count, seed=seed, **overrides)


class ReportedRbt(Mapping):
    """Server's RBT view: each node's value at its latest report tick.

    A tick stores the node's frozen playout snapshot; the value at the tick
    instant is projected only when the scheduler asks for it.
    """

    def __init__(self):
        self.reports: dict[NodeId, tuple[float, cl.PlayoutSnapshot]] = {}

    def __getitem__(self, node):
        at, snap = self.reports[node]
        return snap.rbt_at(at)

    def get(self, node, default=None):
        rep = self.reports.get(node)
        if rep is None:
            return default
        return rep[1].rbt_at(rep[0])

    def __iter__(self):
        return iter(self.reports)

    def __len__(self):
        return len(self.reports)


class Simulation:
    """One run of a scenario. ``observer(decision, server_state)`` is called
    for every scheduling decision before its transfer starts."""

    def __init__(self, scenario: Scenario, observer: Callable[[ScheduleDecision, ServerState], None] | None = None):
        scenario.validate()
        self.scenario = sc = scenario
        self.video = sc.video
        self.observer = observer
        self.p2p = sc.mode == "p2p"
        n = sc.node_count
        self.offsets = sc.resolve_offsets()
        self.trajectories = sc.resolve_trajectories()
        self.mobile = any(not t.static for t in self.trajectories)
        self._static_positions = None if self.mobile else {i: t.at(0.0) for i, t in enumerate(self.trajectories)}

        self.rbt_view = ReportedRbt()
        self.server = ServerState(
            connectivity=ConnectivityMap(),
            content=ContentMap(sc.video.piece_count),
            trust=TrustState(sc.trust_threshold, sc.default_trust, sc.sticky_blacklist),
            rssi_threshold=sc.rssi_threshold,
            rbt_view=self.rbt_view,
            grouping=sc.grouping,
        )
        self.clients = [
            cl.PlayoutState(i, prebuffer_target=sc.prebuffer_s, high_watermark=sc.high_watermark, joined_at=self.offsets[i], clock=self.offsets[i])
            for i in range(n)
        ]
        self.snapshots: list[cl.PlayoutSnapshot | None] = [None] * n
        self.neighbor_lists = [NeighborList(i, (), 0.0) for i in range(n)]
        self.active: set[NodeId] = set()
        self.loss_rngs = {}
        if sc.timers.probe_loss_prob > 0:
            self.loss_rngs = {i: rng_stream(sc.seed, f"probe-loss/{i}") for i in range(n)}

        self.now = 0.0
        self._queue: list[Event] = []
        self._seq = 0
        self._wake: dict[NodeId, float] = {}
        self._playout_version = [0] * n
        self._server_active = 0
        self._busy_marks = 0
        self._idle_marks = 0
        self.pending_completions = n
        self.transfers: list[Transfer] = []
        self.decisions: list[ScheduleDecision] = []
        self.per_node_bytes = [[0, 0, 0] for _ in range(n)]  # server, peers, uploaded

        for i, t in enumerate(self.offsets):
            self.push(t, Kind.NODE_JOIN, i)
        for ev in sorted(sc.trust_events, key=lambda e: (e.at, e.evaluator, e.subject)):
            self.push(ev.at, Kind.TRUST_EVENT, ev.subject, ev)

    # queue -------------------------------------------------------------

    def push(self, at: float, kind: Kind, node: int, payload: Any = None) -> None:
        self._seq += 1
        heapq.heappush(self._queue, Event(at, kind, node, self._seq, payload))

    def positions_at(self, t: float) -> dict[NodeId, Position]:
        if self._static_positions is not None:
            return self._static_positions
        return {i: tr.at(t) for i, tr in enumerate(self.trajectories)}

    # main loop ---------------------------------------------------------

    def advance(self, until: float) -> None:
        """Process every event at or before ``until`` (or until all nodes finish)."""
        queue = self._queue
        handlers = self._handlers()
        while queue and self.pending_completions:
            ev = queue[0]
            if ev.at > until:
                break
            heapq.heappop(queue)
            if ev.at < self.now:
                raise ProtocolError(f"event scheduled in the past: {ev}")
            self.now = ev.at
            try:
                handlers[ev.kind](ev)
            except ProtocolError as exc:
                raise ProtocolError(f"{exc} (while handling {ev})") from exc

    def run(self) -> Report:
        cap = self.scenario.duration_cap
        self.advance(cap)
        truncated = self.pending_completions > 0
        if truncated and self._queue:
            self.now = max(self.now, cap)
        return self.build_report(truncated)

    def handle_event(self, ev: Event) -> None:
        if ev.at < self.now:
            raise ProtocolError(f"event scheduled in the past: {ev}")
        self.now = ev.at
        self._handlers()[ev.kind](ev)

    def _handlers(self):
        return {
            Kind.NODE_JOIN: self._on_join,
            Kind.TRANSFER_COMPLETE: self._on_transfer_complete,
            Kind.PIECE_REQUEST: self._on_piece_request,
            Kind.REPORT_TICK: self._on_report_tick,
            Kind.PROBE_ROUND: self._on_probe_round,
            Kind.PLAYOUT_TICK: self._on_playout_tick,
            Kind.TRUST_EVENT: self._on_trust_event,
        }

    # handlers ----------------------------------------------------------

    def _on_join(self, ev: Event) -> None:
        n = ev.node
        self.active.add(n)
        c = self.clients[n]
        c.clock = self.now
        self.snapshots[n] = c.snapshot(self.video)
        if self.p2p:
            timers = self.scenario.timers
            first = first_probe_time(n, self.scenario.node_count, self.now, timers)
            self.push(first, Kind.PROBE_ROUND, n, first)
            self.push(self.now, Kind.REPORT_TICK, n, 0)
        self.push(self.now, Kind.PIECE_REQUEST, n)

    def _on_probe_round(self, ev: Event) -> None:
        n = ev.node
        timers = self.scenario.timers
        nl = run_probe_round(
            n,
            self.positions_at(self.now),
            self.scenario.radio,
            self.now,
            self.neighbor_lists[n],
            responders=self.active,
            loss_prob=timers.probe_loss_prob,
            rng=self.loss_rngs.get(n),
        )
        self.neighbor_lists[n] = expire_stale(nl, self.now, timers)
        nxt = ev.payload + timers.probe_interval
        self.push(nxt, Kind.PROBE_ROUND, n, nxt)

    def _on_report_tick(self, ev: Event) -> None:
        n = ev.node
        # neighbor list and playout snapshot are immutable, so the report is two references
        self.server.connectivity.view[n] = self.neighbor_lists[n].entries
        self.rbt_view.reports[n] = (self.now, self.snapshots[n])
        k = ev.payload + 1
        self.push(self.offsets[n] + k * self.scenario.timers.report_interval, Kind.REPORT_TICK, n, k)

    def _on_trust_event(self, ev: Event) -> None:
        self.server.trust.record(ev.payload)

    def _sync(self, n: NodeId) -> cl.PlayoutState:
        c = self.clients[n]
        if self.now > c.clock:
            was_complete = c.complete
            cl.advance_playout(c, self.now - c.clock, self.video)
            if c.complete and not was_complete:
                self.pending_completions -= 1
        return c

    def _on_playout_tick(self, ev: Event) -> None:
        if ev.payload == self._playout_version[ev.node]:
            self._sync(ev.node)

    def _on_piece_request(self, ev: Event) -> None:
        n = ev.node
        if n not in self.active:
            return
        c = self.clients[n]
        if c.inflight is not None or n in self.server.busy:
            return
        self._sync(n)
        piece = cl.next_request(c, self.video)
        if piece is None:
            self._schedule_wake(n, c)
            return
        if self.p2p:
            decision = schedule_piece(self.server, n, piece, self.now)
        else:
            if n in self.server.busy or piece in c.held:
                raise ProtocolError(f"node {n} cannot request piece {piece}")
            decision = ScheduleDecision(n, piece, SERVER, None, None, self.now)
        if self.observer is not None:
            self.observer(decision, self.server)
        self.decisions.append(decision)
        self._start_transfer(decision)

    def _schedule_wake(self, n: NodeId, c: cl.PlayoutState) -> None:
        if len(c.held) >= self.video.piece_count:
            return
        wait = cl.time_until_below_watermark(c, self.video)
        if wait is None:
            return
        at = self.now + wait
        if at <= self.now:
            at = math.nextafter(self.now, math.inf)
        pending = self._wake.get(n)
        if pending is not None and self.now < pending <= at:
            return
        self._wake[n] = at
        self.push(at, Kind.PIECE_REQUEST, n)

    def _start_transfer(self, d: ScheduleDecision) -> None:
        sc = self.scenario
        size = self.video.piece_size
        group = None
        if d.source is SERVER:
            rate = sc.radio.cell_rate
            if sc.radio.cell_capacity is not None:
                rate = min(rate, sc.radio.cell_capacity / (self._server_active + 1))
            self._server_active += 1
        else:
            rec = next(r for r in self.server.connectivity.neighbors(d.requester) if r.neighbor == d.source)
            rate = wifi_rate(rec.rssi, sc.radio)
            if sc.grouping == "global":
                group = "g0"
            else:
                groups = assign_group(self.server, self.active)
                group = group_label(groups, d.requester)
            self.server.mark_busy(d.source)
            self._busy_marks += 1
        self.server.mark_busy(d.requester)
        self._busy_marks += 1
        t = Transfer(len(self.transfers), d.source, d.requester, d.piece, self.now, size * 8 / rate, size, group)
        self.transfers.append(t)
        self.clients[d.requester].inflight = d.piece
        self.push(t.end, Kind.TRANSFER_COMPLETE, t.dest, t.id)

    def _on_transfer_complete(self, ev: Event) -> None:
        t = self.transfers[ev.payload]
        server = self.server
        server.mark_idle(t.dest)
        self._idle_marks += 1
        nb = self.per_node_bytes
        if t.source is SERVER:
            self._server_active -= 1
            nb[t.dest][0] += t.bytes
        else:
            server.mark_idle(t.source)
            self._idle_marks += 1
            nb[t.dest][1] += t.bytes
            nb[t.source][2] += t.bytes
        c = self._sync(t.dest)
        upd = cl.on_piece_received(c, t.piece, self.video, self.now)
        server.apply_content_update(upd.node, upd.piece)
        self.snapshots[t.dest] = c.snapshot(self.video)
        left = cl.time_to_run_end(c, self.video)
        if left is not None:
            self._playout_version[t.dest] += 1
            self.push(self.now + left, Kind.PLAYOUT_TICK, t.dest, self._playout_version[t.dest])
        self.push(self.now, Kind.PIECE_REQUEST, t.dest)
        if t.source is not SERVER:
            self.push(self.now, Kind.PIECE_REQUEST, t.source)

    # report ------------------------------------------------------------

    @property
    def busy_pairing_ok(self) -> bool:
        return self._busy_marks == self._idle_marks and not self.server.busy

    def build_report(self, truncated: bool) -> Report:
        end = self.now
        nodes = []
        for i, c in enumerate(self.clients):
            if i in self.active:
                cl.advance_to(c, end, self.video)
            stalls = list(c.stall_intervals)
            if c.stalled_since is not None:
                stalls.append((c.stalled_since, end))
            srv, peers, up = self.per_node_bytes[i]
            nodes.append(
                NodeRecord(
                    node=i,
                    joined_at=self.offsets[i],
                    bytes_from_server=srv,
                    bytes_from_peers=peers,
                    bytes_uploaded=up,
                    startup_delay=cl.startup_delay(c),
                    stall_count=len(stalls),
                    stall_total=math.fsum(b - a for a, b in stalls),
                    completed=c.complete,
                    completed_at=c.completed_at,
                    final_playhead=c.playhead,
                )
            )
        server_bytes = sum(r.bytes_from_server for r in nodes)
        peer_bytes = sum(r.bytes_from_peers for r in nodes)
        return Report(
            mode=self.scenario.mode,
            seed=self.scenario.seed,
            nodes=nodes,
            server_bytes=server_bytes,
            peer_bytes=peer_bytes,
            improvement=offload_fraction(server_bytes, peer_bytes),
            run_duration=end,
            truncated=truncated,
            decisions=[decision_to_dict(d) for d in self.decisions],
            transfers=[t.to_dict() for t in self.transfers],
            config=scenario_echo(self.scenario),
        )


def decision_to_dict(d: ScheduleDecision) -> dict[str, Any]:
    return {
        "at": d.at,
        "requester": d.requester,
        "piece": d.piece,
        "source": "server" if d.source is SERVER else d.source,
        "audit": None if d.audit is None else list(d.audit),
        "rbt": d.rbt,
    }


def scenario_echo(sc: Scenario) -> dict[str, Any]:
    from .config import scenario_to_dict

    return scenario_to_dict(sc)


def run(scenario: Scenario, observer=None) -> Report:
    return Simulation(scenario, observer).run()


def with_mode(scenario: Scenario, mode: str) -> Scenario:
    return replace(scenario, mode=mode)
