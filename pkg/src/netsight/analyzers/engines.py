"""Engine wrappers that run the analyzers inside a chain.

An engine consumes the messages of its subscribed topics, then in ``finish``
returns ``(topic, payload)`` pairs. The runner publishes only pairs whose
topic appears in the descriptor's ``emits`` list, so a config can switch an
output off by leaving its topic out.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from ..decoders.types import DhcpEvent, DnsEvent, FlowRecord, HttpEvent, TlsEvent, TlsStage
from ..pipeline.compose import AttributeClaim
from .behavior import characterize_behavior, to_us
from .classifiers import (
    DnsUsageSummary,
    classify_iot,
    fingerprint_tls,
    infer_manufacturer,
    mine_user_agent,
    summarize_dns,
)


@dataclass(frozen=True)
class DeviceActivity:
    """Packets a device originated: integer microsecond stamps and wire sizes."""

    device_key: str
    ts_us: tuple[int, ...]
    sizes: tuple[int, ...]


@dataclass(frozen=True)
class ProfileNote:
    device_key: str
    name: str
    value: Any


ENGINE_TYPES: dict[str, type["Engine"]] = {}


def register_engine(cls: type["Engine"]) -> type["Engine"]:
    ENGINE_TYPES[cls.type_name] = cls
    return cls


class Engine:
    type_name = ""

    def __init__(self, engine_id: str, params: dict, ctx):
        self.engine_id = engine_id
        self.params = params
        self.ctx = ctx

    def handle(self, topic: str, payload: Any) -> None:
        pass

    def finish(self) -> list[tuple[str, Any]]:
        return []


def _bucket(store: dict[str, list], key: str | None, item: Any) -> None:
    if key is not None:
        store.setdefault(key, []).append(item)


@register_engine
class NullEngine(Engine):
    """Consumes its topics and emits nothing."""

    type_name = "null"


@register_engine
class DnsUsageEngine(Engine):
    type_name = "dns_usage"

    def __init__(self, *args):
        super().__init__(*args)
        self.events: dict[str, list[DnsEvent]] = {}

    def handle(self, topic, payload):
        if isinstance(payload, DnsEvent):
            _bucket(self.events, self.ctx.device_for_event(payload), payload)

    def finish(self):
        domains = self.ctx.knowledge.domains
        return [("dns_summary", summarize_dns(k, self.events[k], domains)) for k in sorted(self.events)]


@register_engine
class IotEngine(Engine):
    type_name = "iot"

    def __init__(self, *args):
        super().__init__(*args)
        self.summaries: dict[str, DnsUsageSummary] = {}
        self.flows: dict[str, list[FlowRecord]] = {}

    def handle(self, topic, payload):
        if isinstance(payload, DnsUsageSummary):
            self.summaries[payload.device_key] = payload
        elif isinstance(payload, FlowRecord):
            _bucket(self.flows, self.ctx.device_for_flow(payload), payload)

    def finish(self):
        out = []
        for key in sorted(self.summaries):
            claim = classify_iot(key, self.summaries[key], self.flows.get(key, ()),
                                 engine_id=self.engine_id, params=self.params)
            if claim is not None:
                out.append(("claims", claim))
        return out


@register_engine
class ManufacturerEngine(Engine):
    type_name = "manufacturer"

    def __init__(self, *args):
        super().__init__(*args)
        self.dhcp: dict[str, list[DhcpEvent]] = {}
        self.tls: dict[str, list[TlsEvent]] = {}
        self.summaries: dict[str, DnsUsageSummary] = {}

    def handle(self, topic, payload):
        if isinstance(payload, DhcpEvent):
            _bucket(self.dhcp, self.ctx.resolver.key_for_mac(payload.client_mac), payload)
        elif isinstance(payload, TlsEvent) and payload.stage is TlsStage.CERTIFICATE:
            _bucket(self.tls, self.ctx.device_for_event(payload), payload)
        elif isinstance(payload, DnsUsageSummary):
            self.summaries[payload.device_key] = payload

    def finish(self):
        keys = set(self.dhcp) | set(self.tls) | set(self.summaries)
        keys |= {k for k in self.ctx.device_keys if self.ctx.mac_of(k)}
        out = []
        for key in sorted(keys):
            claims = infer_manufacturer(
                key, self.ctx.mac_of(key), self.ctx.knowledge,
                self.dhcp.get(key, ()), self.tls.get(key, ()), self.summaries.get(key),
                last_seen=self.ctx.last_seen(key), engine_id=self.engine_id, params=self.params,
            )
            out.extend(("claims", c) for c in claims)
        return out


@register_engine
class UserAgentEngine(Engine):
    type_name = "useragent"

    def __init__(self, *args):
        super().__init__(*args)
        self.events: dict[str, list[HttpEvent]] = {}

    def handle(self, topic, payload):
        if isinstance(payload, HttpEvent):
            _bucket(self.events, self.ctx.device_for_event(payload), payload)

    def finish(self):
        rules = self.ctx.knowledge.ua_rules
        out = []
        for key in sorted(self.events):
            claims = mine_user_agent(key, self.events[key], rules, engine_id=self.engine_id, params=self.params)
            out.extend(("claims", c) for c in claims)
        return out


@register_engine
class TlsFingerprintEngine(Engine):
    type_name = "tls_fingerprint"

    def __init__(self, *args):
        super().__init__(*args)
        self.events: dict[str, list[TlsEvent]] = {}

    def handle(self, topic, payload):
        if isinstance(payload, TlsEvent) and payload.stage is TlsStage.CLIENT_HELLO:
            _bucket(self.events, self.ctx.device_for_event(payload), payload)

    def finish(self):
        fps = self.ctx.knowledge.fingerprints
        out: list[tuple[str, Any]] = []
        for key in sorted(self.events):
            claims, unknown = fingerprint_tls(key, self.events[key], fps, engine_id=self.engine_id,
                                              params=self.params)
            out.extend(("claims", c) for c in claims)
            if unknown:
                out.append(("notes", ProfileNote(key, "unknown_tls_fingerprints", unknown)))
        return out


@register_engine
class BehaviorEngine(Engine):
    type_name = "behavior"

    def __init__(self, *args):
        super().__init__(*args)
        self.activity: dict[str, DeviceActivity] = {}
        self.flow_starts: dict[str, list[int]] = {}

    def handle(self, topic, payload):
        if isinstance(payload, DeviceActivity):
            self.activity[payload.device_key] = payload
        elif isinstance(payload, FlowRecord):
            _bucket(self.flow_starts, self.ctx.device_for_flow(payload), to_us(payload.first_ts))

    def finish(self):
        out: list[tuple[str, Any]] = []
        for key in sorted(self.activity):
            act = self.activity[key]
            result = characterize_behavior(key, act.ts_us, act.sizes, self.flow_starts.get(key, ()),
                                           engine_id=self.engine_id, params=self.params)
            if result is not None:
                profile, claim = result
                out.append(("behavior", profile))
                out.append(("claims", claim))
        return out


@register_engine
class RegistryOwnerEngine(Engine):
    """Owner claims straight from the device registry."""

    type_name = "registry_owner"

    def finish(self):
        conf = float(self.params.get("conf_registry", 1.0))
        out = []
        for key in sorted(self.ctx.device_keys):
            mac = self.ctx.mac_of(key)
            entry = self.ctx.knowledge.lookup_registration(mac) if mac else None
            if entry is not None and entry.owner:
                out.append(("claims", AttributeClaim(key, "owner", entry.owner, conf, self.engine_id,
                                                     self.ctx.last_seen(key))))
        return out
