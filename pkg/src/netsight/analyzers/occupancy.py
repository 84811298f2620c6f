"""Occupancy estimation from registry-attributed device activity."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from ..knowledge import DeviceRegistry

DEFAULT_WINDOW = 900


@dataclass(frozen=True)
class OccupancyEstimate:
    start_ts: float
    end_ts: float
    present_persons: tuple[str, ...]
    unattributed_devices: int

    @property
    def count(self) -> int:
        return len(self.present_persons)

    def as_dict(self) -> dict:
        return {
            "start": self.start_ts,
            "end": self.end_ts,
            "count": self.count,
            "present_persons": list(self.present_persons),
            "unattributed_devices": self.unattributed_devices,
        }


def tile_windows(span: tuple[float, float], window_len: float = DEFAULT_WINDOW) -> list[tuple[float, float]]:
    """Fixed windows aligned to multiples of ``window_len`` covering ``span``."""
    start, end = span
    first = math.floor(start / window_len) * window_len
    n = int(math.floor((end - first) / window_len)) + 1
    return [(first + i * window_len, first + (i + 1) * window_len) for i in range(n)]


def estimate_occupancy(
    activity: Mapping[str, Iterable[float]],
    registry: DeviceRegistry,
    window_len: float = DEFAULT_WINDOW,
    span: tuple[float, float] | None = None,
    macs: Mapping[str, str | None] | None = None,
) -> list[OccupancyEstimate]:
    """Count distinct registered owners with at least one active device per window.

    ``activity`` maps device key to the timestamps of packets the device
    originated. ``macs`` maps device key to hardware address; keys missing from
    it are treated as MACs when they look like one.
    """
    stamps = {k: list(v) for k, v in activity.items()}
    if span is None:
        every = [t for ts in stamps.values() for t in ts]
        if not every:
            return []
        span = (min(every), max(every))
    windows = tile_windows(span, window_len)
    origin = windows[0][0]
    present: list[set[str]] = [set() for _ in windows]
    unattributed: list[set[str]] = [set() for _ in windows]
    for key in sorted(stamps):
        mac = (macs or {}).get(key, key if key.count(":") == 5 else None)
        entry = registry.lookup(mac) if mac else None
        owner = entry.owner if entry is not None else ""
        for t in stamps[key]:
            i = int((t - origin) // window_len)
            if not 0 <= i < len(windows):
                continue
            if owner:
                present[i].add(owner)
            else:
                unattributed[i].add(key)
    return [
        OccupancyEstimate(w[0], w[1], tuple(sorted(present[i])), len(unattributed[i]))
        for i, w in enumerate(windows)
    ]
