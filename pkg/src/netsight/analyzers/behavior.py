"""Time-series behavior characterization of a device's traffic."""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .._kernels import periodicity_score
from ..pipeline.compose import AttributeClaim

US = 1_000_000
KIB = 1024


class BehaviorMode(str, Enum):
    IDLE = "Idle"
    PERIODIC_BEACON = "PeriodicBeacon"
    INTERACTIVE = "Interactive"
    STREAMING = "Streaming"


BEHAVIOR_DEFAULTS = {
    "window_len": 60,
    "min_windows": 3,
    "periodicity_threshold": 0.7,
    "idle_bytes": 1 * KIB,
    "stream_bytes": 100 * KIB,
    "stream_burstiness": 0.5,
    "conf_behavior": 0.6,
}


@dataclass
class BehaviorProfile:
    device_key: str
    window_len: float
    series: list[dict[str, int]] = field(default_factory=list)
    periodicity_score: float = 0.0
    burstiness: float = 0.0
    mean_bytes: float = 0.0
    mode: BehaviorMode = BehaviorMode.IDLE

    def as_dict(self) -> dict:
        return {
            "window_len": self.window_len,
            "windows": len(self.series),
            "periodicity_score": round(self.periodicity_score, 9),
            "burstiness": round(self.burstiness, 9),
            "mean_bytes": round(self.mean_bytes, 6),
            "mode": self.mode.value,
        }


def to_us(ts: float) -> int:
    return round(ts * US)


def window_series(ts_us: Sequence[int], sizes: Sequence[int], flow_starts_us: Sequence[int] = (),
                  window_len: float = 60) -> list[dict[str, int]]:
    """Bin packets into windows anchored at the first packet.

    The window count is ``ceil(span / window_len)``; a packet exactly at the end
    of the span falls into the last window.
    """
    if not ts_us:
        return []
    first = min(ts_us)
    span = max(ts_us) - first
    wl = round(window_len * US)
    n = -(-span // wl)
    if n == 0:
        return []
    series = [{"bytes": 0, "pkts": 0, "flows": 0} for _ in range(n)]
    for t, size in zip(ts_us, sizes):
        w = series[min((t - first) // wl, n - 1)]
        w["bytes"] += size
        w["pkts"] += 1
    for t in flow_starts_us:
        if first <= t:
            series[min((t - first) // wl, n - 1)]["flows"] += 1
    return series


def classify_mode(score: float, mean_bytes: float, burstiness: float, params: dict) -> BehaviorMode:
    # a beacon is small and regular; checked ahead of Idle so low-volume heartbeats are recognised
    if score >= params["periodicity_threshold"] and mean_bytes < params["stream_bytes"]:
        return BehaviorMode.PERIODIC_BEACON
    if mean_bytes < params["idle_bytes"]:
        return BehaviorMode.IDLE
    if mean_bytes >= params["stream_bytes"] and burstiness < params["stream_burstiness"]:
        return BehaviorMode.STREAMING
    return BehaviorMode.INTERACTIVE


def characterize_behavior(device_key: str, ts_us: Sequence[int], sizes: Sequence[int],
                          flow_starts_us: Sequence[int] = (), *, engine_id: str = "behavior",
                          params: dict | None = None) -> tuple[BehaviorProfile, AttributeClaim] | None:
    """Behavior profile plus mode claim, or None when the span covers fewer than ``min_windows``."""
    p = {**BEHAVIOR_DEFAULTS, **(params or {})}
    series = window_series(ts_us, sizes, flow_starts_us, p["window_len"])
    if len(series) < p["min_windows"]:
        return None
    volume = [float(w["bytes"]) for w in series]
    mean = statistics.fmean(volume)
    burst = statistics.pstdev(volume) / mean if mean > 0 else 0.0
    score = periodicity_score(volume)
    mode = classify_mode(score, mean, burst, p)
    profile = BehaviorProfile(device_key, p["window_len"], series, score, burst, mean, mode)
    claim = AttributeClaim(device_key, "behavior_mode", mode.value, p["conf_behavior"], engine_id,
                           max(ts_us) / US)
    return profile, claim
