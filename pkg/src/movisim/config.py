"""Scenario file schema: strict JSON parsing and serialization.

Every section is optional and falls back to the defaults of
:class:`movisim.sim.Scenario`; any unknown key is an error.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from .core import VideoSpec
from .discovery import DiscoveryTimers
from .errors import ConfigError, InputError
from .radio import RadioParams
from .sim import Scenario
from .trust import TrustEvaluation

SCHEMA_VERSION = 1

_TOP = {
    "schema_version", "node_count", "layout", "video", "radio", "timers", "scheduler",
    "client", "trust_events", "start_offsets", "offset_range_s", "mode", "seed", "duration_cap_s",
}
_VIDEO = {"piece_count": "piece_count", "piece_size_bytes": "piece_size", "bitrate_bps": "bitrate"}
_RADIO = {
    "tx_power_dbm": "tx_power",
    "pl0_db": "pl0",
    "exponent": "exponent",
    "rssi_floor_dbm": "rssi_floor",
    "wifi_rate_bps": "wifi_rate",
    "cell_rate_bps": "cell_rate",
    "wifi_two_tier": "wifi_two_tier",
    "cell_capacity_bps": "cell_capacity",
}
_TIMERS = {
    "probe_s": "probe_interval",
    "report_s": "report_interval",
    "staleness_rounds": "staleness_rounds",
    "probe_loss_prob": "probe_loss_prob",
}
_SCHED = {
    "trust_threshold": "trust_threshold",
    "rssi_threshold_dbm": "rssi_threshold",
    "grouping": "grouping",
    "sticky_blacklist": "sticky_blacklist",
    "default_trust": "default_trust",
}
_CLIENT = {"prebuffer_s": "prebuffer", "high_watermark_s": "high_watermark", "pipeline_depth": "pipeline_depth"}
_TRUST_EVENT = {"at", "evaluator", "subject", "value"}
_INTS = {"piece_count", "piece_size", "staleness_rounds", "pipeline_depth", "node_count", "seed"}
_BOOLS = {"wifi_two_tier", "sticky_blacklist"}
_STRS = {"grouping", "mode"}
_OPTIONAL = {"cell_capacity", "prebuffer"}


def _check_keys(obj: Any, allowed, where: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object, got {type(obj).__name__}")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(f"{where}: unknown field(s) {', '.join(unknown)}")
    return obj


def _value(name: str, raw: Any, where: str):
    if raw is None and name in _OPTIONAL:
        return None
    if name in _BOOLS:
        if not isinstance(raw, bool):
            raise ConfigError(f"{where}: expected true/false, got {raw!r}")
        return raw
    if name in _STRS:
        if not isinstance(raw, str):
            raise ConfigError(f"{where}: expected a string, got {raw!r}")
        return raw
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {raw!r}")
    if name in _INTS:
        if isinstance(raw, float) and not raw.is_integer():
            raise ConfigError(f"{where}: expected an integer, got {raw!r}")
        return int(raw)
    return float(raw)


def _section(doc: dict, key: str, mapping: dict[str, str]) -> dict[str, Any]:
    body = _check_keys(doc.get(key, {}), mapping, key)
    return {mapping[k]: _value(mapping[k], v, f"{key}.{k}") for k, v in body.items()}


def _points(raw: Any, width: int, where: str) -> list[tuple[float, ...]]:
    if not isinstance(raw, list):
        raise ConfigError(f"{where}: expected a list")
    out = []
    for i, p in enumerate(raw):
        if not isinstance(p, list) or len(p) != width:
            raise ConfigError(f"{where}[{i}]: expected {width} numbers")
        out.append(tuple(_value("x", v, f"{where}[{i}]") for v in p))
    return out


def scenario_from_dict(doc: Any) -> Scenario:
    doc = _check_keys(doc, _TOP, "scenario")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    kw: dict[str, Any] = {}
    for key, name in (("node_count", "node_count"), ("seed", "seed"), ("mode", "mode"), ("duration_cap_s", "duration_cap")):
        if key in doc:
            kw[name] = _value(name, doc[key], key)
    if "seed" in kw and not 0 <= kw["seed"] < 2**64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    try:
        defaults = Scenario()
        kw["video"] = VideoSpec(**{**_video_kw(defaults.video), **_section(doc, "video", _VIDEO)})
        kw["radio"] = RadioParams(**{**_radio_kw(defaults.radio), **_section(doc, "radio", _RADIO)})
        kw["timers"] = DiscoveryTimers(**{**_timer_kw(defaults.timers), **_section(doc, "timers", _TIMERS)})
    except InputError as exc:
        raise ConfigError(str(exc)) from None
    kw.update(_section(doc, "scheduler", _SCHED))
    kw.update(_section(doc, "client", _CLIENT))

    layout = _check_keys(doc.get("layout", {}), {"square_side_m", "positions", "waypoints"}, "layout")
    if len(layout) > 1:
        raise ConfigError("layout: give exactly one of square_side_m, positions, waypoints")
    if "square_side_m" in layout:
        kw["square_side"] = _value("square_side", layout["square_side_m"], "layout.square_side_m")
    if "positions" in layout:
        kw["positions"] = _points(layout["positions"], 2, "layout.positions")
    if "waypoints" in layout:
        wps = layout["waypoints"]
        if not isinstance(wps, list):
            raise ConfigError("layout.waypoints: expected a list per node")
        kw["waypoints"] = [_points(w, 3, f"layout.waypoints[{i}]") for i, w in enumerate(wps)]

    if "start_offsets" in doc and "offset_range_s" in doc:
        raise ConfigError("give at most one of start_offsets, offset_range_s")
    if "start_offsets" in doc:
        raw = doc["start_offsets"]
        if not isinstance(raw, list):
            raise ConfigError("start_offsets: expected a list of numbers")
        kw["start_offsets"] = [_value("x", v, f"start_offsets[{i}]") for i, v in enumerate(raw)]
    if "offset_range_s" in doc:
        rng = _points([doc["offset_range_s"]], 2, "offset_range_s")[0]
        kw["offset_range"] = rng

    events = []
    raw_events = doc.get("trust_events", [])
    if not isinstance(raw_events, list):
        raise ConfigError("trust_events: expected a list")
    for i, ev in enumerate(raw_events):
        where = f"trust_events[{i}]"
        ev = _check_keys(ev, _TRUST_EVENT, where)
        missing = sorted(_TRUST_EVENT - set(ev))
        if missing:
            raise ConfigError(f"{where}: missing field(s) {', '.join(missing)}")
        try:
            events.append(
                TrustEvaluation(
                    evaluator=_value("node_count", ev["evaluator"], f"{where}.evaluator"),
                    subject=_value("node_count", ev["subject"], f"{where}.subject"),
                    value=_value("x", ev["value"], f"{where}.value"),
                    at=_value("x", ev["at"], f"{where}.at"),
                )
            )
        except InputError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    kw["trust_events"] = events
    return Scenario(**kw)


def _video_kw(v: VideoSpec) -> dict:
    return {"piece_count": v.piece_count, "piece_size": v.piece_size, "bitrate": v.bitrate}


def _radio_kw(r: RadioParams) -> dict:
    return {name: getattr(r, name) for name in _RADIO.values()}


def _timer_kw(t: DiscoveryTimers) -> dict:
    return {name: getattr(t, name) for name in _TIMERS.values()}


def scenario_to_dict(sc: Scenario) -> dict[str, Any]:
    if sc.waypoints is not None:
        layout = {"waypoints": [[list(p) for p in w] for w in sc.waypoints]}
    elif sc.positions is not None:
        layout = {"positions": [list(p) for p in sc.positions]}
    else:
        layout = {"square_side_m": sc.square_side}
    doc: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "node_count": sc.node_count,
        "layout": layout,
        "video": {k: getattr(sc.video, v) for k, v in _VIDEO.items()},
        "radio": {k: getattr(sc.radio, v) for k, v in _RADIO.items()},
        "timers": {k: getattr(sc.timers, v) for k, v in _TIMERS.items()},
        "scheduler": {k: getattr(sc, v) for k, v in _SCHED.items()},
        "client": {k: getattr(sc, v) for k, v in _CLIENT.items()},
        "trust_events": [{"at": e.at, "evaluator": e.evaluator, "subject": e.subject, "value": e.value} for e in sc.trust_events],
        "mode": sc.mode,
        "seed": sc.seed,
        "duration_cap_s": sc.duration_cap,
    }
    if sc.start_offsets is not None:
        doc["start_offsets"] = list(sc.start_offsets)
    else:
        doc["offset_range_s"] = list(sc.offset_range)
    return doc


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read scenario file {path}: {exc.strerror or exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return scenario_from_dict(doc)


def dump_scenario(sc: Scenario) -> str:
    return json.dumps(scenario_to_dict(sc), indent=2, sort_keys=True)
