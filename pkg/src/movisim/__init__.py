"""Simulator and protocol library for server-coordinated P2P video-on-demand
over combined 3G and ad-hoc Wi-Fi links."""

from .core import SERVER, ConnectivityMap, ContentMap, NeighborRecord, VideoSpec
from .errors import ConfigError, InputError, ProtocolError
from .metrics import Report, compare, improvement
from .sim import Scenario, Simulation, flash_crowd, run

__all__ = [
    "SERVER",
    "ConfigError",
    "ConnectivityMap",
    "ContentMap",
    "InputError",
    "NeighborRecord",
    "ProtocolError",
    "Report",
    "Scenario",
    "Simulation",
    "VideoSpec",
    "compare",
    "flash_crowd",
    "improvement",
    "run",
]
