"""Attribute classifiers, behavior and occupancy analysis, and their chain engines."""

from .behavior import (
    BEHAVIOR_DEFAULTS,
    BehaviorMode,
    BehaviorProfile,
    characterize_behavior,
    classify_mode,
    window_series,
)
from .classifiers import (
    DEFAULTS,
    DnsUsageSummary,
    cipher_fingerprint,
    classify_iot,
    fingerprint_tls,
    infer_manufacturer,
    mine_user_agent,
    summarize_dns,
)
from .engines import ENGINE_TYPES, DeviceActivity, Engine, ProfileNote, register_engine
from .occupancy import OccupancyEstimate, estimate_occupancy, tile_windows

__all__ = [
    "BEHAVIOR_DEFAULTS",
    "BehaviorMode",
    "BehaviorProfile",
    "DEFAULTS",
    "DeviceActivity",
    "DnsUsageSummary",
    "ENGINE_TYPES",
    "Engine",
    "OccupancyEstimate",
    "ProfileNote",
    "characterize_behavior",
    "cipher_fingerprint",
    "classify_iot",
    "classify_mode",
    "estimate_occupancy",
    "fingerprint_tls",
    "infer_manufacturer",
    "mine_user_agent",
    "register_engine",
    "summarize_dns",
    "tile_windows",
    "window_series",
]
