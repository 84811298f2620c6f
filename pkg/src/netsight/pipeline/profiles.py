"""Device profiles and their NDJSON export."""

from __future__ import annotations

import io
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Mapping

from .compose import AttributeClaim, Resolution
from .identity import DeviceIdentity


@dataclass
class DeviceProfile:
    device_key: str
    identity: DeviceIdentity
    attributes: dict[str, Resolution] = field(default_factory=dict)
    claims: list[AttributeClaim] = field(default_factory=list)
    counters: dict = field(default_factory=dict)
    behavior: object | None = None
    violations: list[str] = field(default_factory=list)
    first_seen: float | None = None
    last_seen: float | None = None

    @property
    def mac(self) -> str | None:
        return self.identity.mac

    def value(self, attribute: str) -> str | None:
        res = self.attributes.get(attribute)
        return res.value if res is not None else None

    def as_dict(self) -> dict:
        claims = sorted(self.claims, key=lambda c: (c.attribute, c.engine_id, c.value, c.ts, c.confidence))
        return {
            "device_key": self.device_key,
            "mac": self.identity.mac,
            "ambiguous": self.identity.ambiguous,
            "ips": [e.as_dict() for e in self.identity.epochs],
            "attributes": {a: r.as_dict() for a, r in sorted(self.attributes.items())},
            "claims": [c.as_dict() for c in claims],
            "counters": self.counters,
            "behavior": self.behavior.as_dict() if self.behavior is not None else None,
            "violations": sorted(self.violations),
            "first_seen": self.first_seen,
            "last_seen": self.last_seen,
        }


def dumps_line(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n"


def export_profiles(profiles: Mapping[str, DeviceProfile] | Iterable[DeviceProfile],
                    sink: IO[str] | str | os.PathLike | None = None) -> str:
    """NDJSON, one device per line in device_key order. Returns the text; also writes ``sink`` if given."""
    items = profiles.values() if isinstance(profiles, Mapping) else profiles
    text = "".join(dumps_line(p.as_dict()) for p in sorted(items, key=lambda p: p.device_key))
    if sink is None:
        return text
    if isinstance(sink, (str, os.PathLike)):
        Path(sink).write_text(text, encoding="utf-8")
    else:
        sink.write(text)
    return text


def load_profiles(source: IO[str] | str | os.PathLike) -> list[dict]:
    """Parse a profile export. Raises ValueError on a line that is not a JSON object with a device_key."""
    if isinstance(source, (str, os.PathLike)):
        fh: IO[str] = io.StringIO(Path(source).read_text(encoding="utf-8"))
    else:
        fh = source
    out = []
    for n, line in enumerate(fh, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"line {n}: {exc.msg}") from exc
        if not isinstance(obj, dict) or "device_key" not in obj:
            raise ValueError(f"line {n}: not a profile object")
        out.append(obj)
    return out
