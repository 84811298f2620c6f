"""Scenario files: devices, activity timeline and the policy pack to label against."""

from __future__ import annotations

import ipaddress
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from .. import policy
from .world import PERSONA_VENDOR, VENDORS

SCHEMA_VERSION = 1

PERSONAS = ("Gateway", "Workstation", "PhoneDualUse", "IoTCamera", "Printer", "Server")

# pattern -> whether it needs the gateway (DNS resolver / DHCP server)
PATTERNS = {
    "browse": True,
    "iot": True,
    "printer": True,
    "dns_mix": True,
    "forbidden_dns": True,
    "geo": True,
    "http_cleartext": False,
    "beacon": False,
    "stream": False,
    "idle": False,
    "presence": False,
    "use_service": False,
    "serve": False,
}


class InvalidScenario(ValueError):
    pass


@dataclass
class DeviceSpec:
    name: str
    persona: str
    mac: str = ""
    owner: str = ""
    dhcp: bool = True
    ip: str | None = None
    registered: bool = True
    authorized: bool = True
    vendor: str | None = None

    @property
    def vendor_name(self) -> str:
        return self.vendor or PERSONA_VENDOR[self.persona]


@dataclass
class Block:
    device: str
    start: float
    end: float
    pattern: str
    params: dict[str, Any] = field(default_factory=dict)


@dataclass
class Scenario:
    name: str
    start: int = 1704096000
    devices: list[DeviceSpec] = field(default_factory=list)
    timeline: list[Block] = field(default_factory=list)
    policies: list[dict] = field(default_factory=list)
    subnet: str = "10.0.0.0/24"
    occupancy_window: int = 900
    schema_version: int = SCHEMA_VERSION

    def device(self, name: str) -> DeviceSpec:
        for d in self.devices:
            if d.name == name:
                return d
        raise KeyError(name)

    @property
    def gateway(self) -> DeviceSpec | None:
        return next((d for d in self.devices if d.persona == "Gateway"), None)

    def to_dict(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"


def _mac_for(vendor: str, index: int) -> str:
    oui = VENDORS[vendor].oui
    return f"{oui}:{(index >> 16) & 0xFF:02x}:{(index >> 8) & 0xFF:02x}:{index & 0xFF:02x}"


def assign_addresses(sc: Scenario) -> None:
    """Fill in missing MACs and IPs deterministically from device order."""
    net = ipaddress.IPv4Network(sc.subnet)
    hosts = list(net.hosts())
    used = {d.ip for d in sc.devices if d.ip}
    pool_dhcp = iter(h for h in hosts[99:] if str(h) not in used)
    pool_static = iter(h for h in hosts[199:] if str(h) not in used)
    for i, d in enumerate(sc.devices, 1):
        if not d.mac:
            d.mac = _mac_for(d.vendor_name, i)
        if d.ip:
            continue
        if d.persona == "Gateway":
            d.ip = str(hosts[0]) if str(hosts[0]) not in used else str(next(pool_static))
        else:
            d.ip = str(next(pool_dhcp if d.dhcp else pool_static))
        used.add(d.ip)


def intervals(blocks: list[Block]) -> list[tuple[float, float]]:
    """Union of a device's blocks as sorted disjoint (start, end) intervals; touching blocks merge."""
    spans = sorted((b.start, b.end) for b in blocks)
    merged: list[list[float]] = []
    for s, e in spans:
        if merged and s <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], e)
        else:
            merged.append([s, e])
    return [(s, e) for s, e in merged]


def validate(sc: Scenario) -> None:
    if sc.schema_version != SCHEMA_VERSION:
        raise InvalidScenario(f"schema_version {sc.schema_version} is not {SCHEMA_VERSION}")
    if not sc.name:
        raise InvalidScenario("scenario needs a name")
    try:
        net = ipaddress.IPv4Network(sc.subnet)
    except ValueError as exc:
        raise InvalidScenario(f"subnet: {exc}") from None
    names, macs, static_ips = set(), set(), set()
    for d in sc.devices:
        if not d.name or d.name in names:
            raise InvalidScenario(f"device name {d.name!r} empty or repeated")
        names.add(d.name)
        if d.persona not in PERSONAS:
            raise InvalidScenario(f"{d.name}: unknown persona {d.persona!r}")
        if d.vendor is not None and d.vendor not in VENDORS:
            raise InvalidScenario(f"{d.name}: unknown vendor {d.vendor!r}")
        if d.mac:
            if d.mac in macs:
                raise InvalidScenario(f"{d.name}: MAC {d.mac} repeated")
            if int(d.mac[:2], 16) & 1:
                raise InvalidScenario(f"{d.name}: group MAC {d.mac}")
            macs.add(d.mac)
        if d.ip:
            try:
                if ipaddress.IPv4Address(d.ip) not in net:
                    raise InvalidScenario(f"{d.name}: {d.ip} outside {sc.subnet}")
            except ValueError:
                raise InvalidScenario(f"{d.name}: bad address {d.ip!r}") from None
            if not d.dhcp or d.persona == "Gateway":
                if d.ip in static_ips:
                    raise InvalidScenario(f"{d.name}: static address {d.ip} repeated")
                static_ips.add(d.ip)
        if d.persona == "Gateway" and d.dhcp:
            raise InvalidScenario(f"{d.name}: the gateway must use a static address")
    if sum(d.persona == "Gateway" for d in sc.devices) > 1:
        raise InvalidScenario("at most one Gateway device")
    gateway = sc.gateway
    by_device: dict[str, list[Block]] = {}
    for b in sc.timeline:
        if b.device not in names:
            raise InvalidScenario(f"timeline refers to unknown device {b.device!r}")
        if b.pattern not in PATTERNS:
            raise InvalidScenario(f"{b.device}: unknown pattern {b.pattern!r}")
        if not (0 <= b.start < b.end):
            raise InvalidScenario(f"{b.device}: block [{b.start}, {b.end}) is empty or negative")
        if (PATTERNS[b.pattern] or sc.device(b.device).dhcp) and gateway is None:
            raise InvalidScenario(f"{b.device}: pattern {b.pattern} or DHCP needs a Gateway device")
        if b.pattern == "use_service":
            server = b.params.get("server")
            if server not in names or server == b.device:
                raise InvalidScenario(f"{b.device}: use_service needs another device as server")
            if sc.device(server).dhcp:
                raise InvalidScenario(f"{b.device}: service provider {server} must be static")
        by_device.setdefault(b.device, []).append(b)
    # devices that share a DHCP address must hold it at disjoint times
    holders: dict[str, list[tuple[float, float, str]]] = {}
    for d in sc.devices:
        if d.dhcp and d.ip and d.name in by_device:
            for s, e in intervals(by_device[d.name]):
                holders.setdefault(d.ip, []).append((s, e, d.name))
    for ip, spans in holders.items():
        spans.sort()
        for (s1, e1, n1), (s2, e2, n2) in zip(spans, spans[1:]):
            if n1 != n2 and s2 <= e1:
                raise InvalidScenario(f"{n1} and {n2} hold {ip} at overlapping times")
    if ip_clash := static_ips & set(holders):
        raise InvalidScenario(f"address {sorted(ip_clash)[0]} is both static and leased")
    try:
        policy.parse_policies(json.dumps(sc.policies))
    except policy.PolicyError as exc:
        raise InvalidScenario(f"policies: {exc}") from None


def parse_scenario(raw: Any) -> Scenario:
    if not isinstance(raw, dict):
        raise InvalidScenario("scenario must be a JSON object")
    try:
        sc = Scenario(
            name=str(raw["name"]),
            start=int(raw.get("start", 1704096000)),
            devices=[DeviceSpec(**d) for d in raw.get("devices", [])],
            timeline=[Block(**b) for b in raw.get("timeline", [])],
            policies=list(raw.get("policies", [])),
            subnet=str(raw.get("subnet", "10.0.0.0/24")),
            occupancy_window=int(raw.get("occupancy_window", 900)),
            schema_version=int(raw.get("schema_version", -1)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidScenario(f"schema: {exc}") from None
    validate(sc)
    assign_addresses(sc)
    return sc


def load_scenario(path: str | os.PathLike) -> Scenario:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidScenario(f"{path}: {exc}") from None
    return parse_scenario(raw)


def bundled_scenario(name: str) -> Scenario:
    from importlib import resources

    data = resources.files("netsight").joinpath(f"data/scenarios/{name}.json").read_text(encoding="utf-8")
    return parse_scenario(json.loads(data))
