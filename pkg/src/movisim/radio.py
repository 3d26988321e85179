"""Log-distance propagation: positions to RSSI and link rates."""

from __future__ import annotations

import bisect
import math
from collections.abc import Sequence
from dataclasses import dataclass

from .errors import InputError

REFERENCE_DISTANCE_M = 1.0


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InputError(f"non-finite position ({self.x}, {self.y})")

    def distance(self, other: Position) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class RadioParams:
    tx_power: float = 15.0  # dBm
    pl0: float = 40.0  # dB at 1 m
    exponent: float = 3.0
    rssi_floor: float = -85.0  # dBm
    wifi_rate: float = 6e6  # bit/s
    cell_rate: float = 2e6  # bit/s per node
    wifi_two_tier: bool = False
    two_tier_rssi: float = -75.0  # dBm; wifi rate halves below this when two-tier
    cell_capacity: float | None = None  # optional aggregate 3G cap, bit/s

    def __post_init__(self):
        if not self.exponent > 0:
            raise InputError(f"path-loss exponent must be > 0, got {self.exponent}")
        if not self.wifi_rate > 0:
            raise InputError(f"wifi_rate must be > 0, got {self.wifi_rate}")
        if not self.cell_rate > 0:
            raise InputError(f"cell_rate must be > 0, got {self.cell_rate}")
        if not self.rssi_floor < self.tx_power - self.pl0:
            raise InputError("rssi_floor must lie below the 1 m RSSI (tx_power - pl0)")
        if self.cell_capacity is not None and not self.cell_capacity > 0:
            raise InputError(f"cell_capacity must be > 0, got {self.cell_capacity}")


def path_loss(distance: float, params: RadioParams) -> float:
    """Path loss in dB; distances under 1 m are clamped to 1 m."""
    if not math.isfinite(distance):
        raise InputError(f"non-finite distance {distance}")
    if distance < 0:
        raise InputError(f"negative distance {distance}")
    d = max(distance, REFERENCE_DISTANCE_M)
    return params.pl0 + 10.0 * params.exponent * math.log10(d / REFERENCE_DISTANCE_M)


def rssi(a: Position, b: Position, params: RadioParams) -> float:
    return params.tx_power - path_loss(a.distance(b), params)


def in_range(a: Position, b: Position, params: RadioParams) -> bool:
    return rssi(a, b, params) >= params.rssi_floor


def range_for_rssi(level: float, params: RadioParams) -> float:
    """Distance at which the received power falls to ``level`` dBm."""
    budget = params.tx_power - params.pl0 - level
    return REFERENCE_DISTANCE_M * 10.0 ** (budget / (10.0 * params.exponent))


def discovery_range(params: RadioParams) -> float:
    return range_for_rssi(params.rssi_floor, params)


def wifi_rate(link_rssi: float, params: RadioParams) -> float:
    if params.wifi_two_tier and link_rssi < params.two_tier_rssi:
        return params.wifi_rate / 2.0
    return params.wifi_rate


class Trajectory:
    """Piecewise-linear motion through ``(t, x, y)`` waypoints.

    Holds the first point before the first waypoint time and the last point
    after the last one.
    """

    def __init__(self, waypoints: Sequence[Sequence[float]]):
        if not waypoints:
            raise InputError("waypoint list is empty")
        pts = [tuple(float(v) for v in w) for w in waypoints]
        for w in pts:
            if len(w) != 3 or not all(math.isfinite(v) for v in w):
                raise InputError(f"waypoint must be finite (t, x, y), got {w}")
        times = [w[0] for w in pts]
        if any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
            raise InputError("waypoint times must be strictly increasing")
        self._times = times
        self._pts = pts

    def at(self, t: float) -> Position:
        times, pts = self._times, self._pts
        if t <= times[0]:
            return Position(pts[0][1], pts[0][2])
        if t >= times[-1]:
            return Position(pts[-1][1], pts[-1][2])
        i = bisect.bisect_right(times, t)
        t0, x0, y0 = pts[i - 1]
        t1, x1, y1 = pts[i]
        f = (t - t0) / (t1 - t0)
        return Position(x0 + f * (x1 - x0), y0 + f * (y1 - y0))

    @property
    def static(self) -> bool:
        return len(self._pts) == 1
