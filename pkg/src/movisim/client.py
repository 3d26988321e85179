"""Per-node playout model: in-order requesting, buffer, RBT, stalls."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .core import NodeId, PieceId, VideoSpec
from .errors import InputError, ProtocolError


@dataclass
class PlayoutState:
    node: NodeId
    held: set[PieceId] = field(default_factory=set)
    playhead: float = 0.0
    playing: bool = False
    prebuffer_target: float = 4.0
    high_watermark: float = 30.0
    started_at: float | None = None
    stall_intervals: list[tuple[float, float]] = field(default_factory=list)
    stalled_since: float | None = None
    inflight: PieceId | None = None
    clock: float = 0.0
    joined_at: float = 0.0
    completed_at: float | None = None

    @property
    def complete(self) -> bool:
        return self.completed_at is not None

    @property
    def stalled(self) -> bool:
        return self.stalled_since is not None

    @property
    def stall_total(self) -> float:
        return sum(end - start for start, end in self.stall_intervals)

    def snapshot(self, video: VideoSpec) -> PlayoutSnapshot:
        return PlayoutSnapshot(
            self.clock,
            self.playhead,
            self.playing and not self.stalled and not self.complete,
            run_end(self, video),
            frozenset(self.held),
        )


@dataclass(frozen=True, slots=True)
class PlayoutSnapshot:
    """Frozen playout state from which RBT at any later instant follows.

    Between piece arrivals the playhead moves linearly until it reaches the
    end of the contiguous run, so no further events are needed to project.
    """

    clock: float
    playhead: float
    advancing: bool
    run_end: float
    held: frozenset[PieceId]

    def playhead_at(self, t: float) -> float:
        if not self.advancing or t <= self.clock:
            return self.playhead
        return min(self.playhead + (t - self.clock), self.run_end)

    def rbt_at(self, t: float) -> float:
        return max(0.0, self.run_end - self.playhead_at(t))


@dataclass(frozen=True)
class ContentUpdate:
    node: NodeId
    piece: PieceId
    at: float


@dataclass(frozen=True)
class StateReport:
    node: NodeId
    at: float
    rbt: float
    held: frozenset[PieceId]


def current_piece(playhead: float, video: VideoSpec) -> int:
    return min(int(playhead // video.piece_duration), video.piece_count)


def run_end(state: PlayoutState, video: VideoSpec) -> float:
    """Playhead position (s) where the contiguous run from the current piece ends."""
    k = current_piece(state.playhead, video)
    held = state.held
    while k < video.piece_count and k in held:
        k += 1
    return k * video.piece_duration


def rbt(state: PlayoutState, video: VideoSpec) -> float:
    return max(0.0, run_end(state, video) - state.playhead)


def next_request(state: PlayoutState, video: VideoSpec) -> PieceId | None:
    if state.inflight is not None or len(state.held) >= video.piece_count:
        return None
    if rbt(state, video) >= state.high_watermark:
        return None
    k = 0
    held = state.held
    while k in held:
        k += 1
    return k


def advance_playout(state: PlayoutState, dt: float, video: VideoSpec) -> PlayoutState:
    """Play ``dt`` seconds forward from ``state.clock``.

    The playhead stops at the first missing piece, opening a stall there, or
    at the end of the video, which completes playback.
    """
    if not dt > 0:
        raise InputError(f"dt must be > 0, got {dt}")
    start = state.clock
    state.clock = start + dt
    if not state.playing or state.stalled or state.complete:
        return state
    end = run_end(state, video)
    # compare instants, not durations: callers schedule ticks at clock + room
    hit = start + (end - state.playhead)
    if state.clock < hit:
        state.playhead = min(state.playhead + dt, end)
        return state
    state.playhead = end
    if end >= video.duration:
        state.playing = False
        state.completed_at = hit
    else:
        state.stalled_since = hit
    return state


def advance_to(state: PlayoutState, now: float, video: VideoSpec) -> PlayoutState:
    if now > state.clock:
        advance_playout(state, now - state.clock, video)
    return state


def on_piece_received(state: PlayoutState, piece: PieceId, video: VideoSpec, now: float | None = None) -> ContentUpdate:
    if state.inflight is None or piece != state.inflight:
        raise ProtocolError(f"node {state.node} received piece {piece}, expected {state.inflight}")
    if now is not None:
        advance_to(state, now, video)
    now = state.clock
    state.held.add(piece)
    state.inflight = None
    if state.stalled and rbt(state, video) > 0:
        state.stall_intervals.append((state.stalled_since, now))
        state.stalled_since = None
    if not state.playing and state.started_at is None:
        if rbt(state, video) >= state.prebuffer_target or len(state.held) >= video.piece_count:
            state.playing = True
            state.started_at = now
    return ContentUpdate(state.node, piece, now)


def report_state(state: PlayoutState, video: VideoSpec) -> StateReport:
    return StateReport(state.node, state.clock, rbt(state, video), frozenset(state.held))


def time_to_run_end(state: PlayoutState, video: VideoSpec) -> float | None:
    """Seconds until the playhead reaches a missing piece or the end, if it is moving."""
    if not state.playing or state.stalled or state.complete:
        return None
    return run_end(state, video) - state.playhead


def time_until_below_watermark(state: PlayoutState, video: VideoSpec) -> float | None:
    """Seconds until RBT drops under the watermark; None when it never will without new pieces."""
    excess = rbt(state, video) - state.high_watermark
    if excess < 0:
        return 0.0
    if not state.playing or state.stalled or state.complete:
        return None
    return excess


def startup_delay(state: PlayoutState) -> float | None:
    if state.started_at is None:
        return None
    return state.started_at - state.joined_at


def check_prebuffer(prebuffer: float, watermark: float) -> None:
    if not (prebuffer > 0 and math.isfinite(prebuffer)):
        raise InputError(f"prebuffer must be > 0, got {prebuffer}")
    if not watermark >= prebuffer:
        raise InputError(f"high watermark ({watermark}) must be >= prebuffer ({prebuffer})")
