"""Chain execution: capture -> decoders -> bus -> engines -> composed profiles."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Any, BinaryIO

from ..analyzers.engines import ENGINE_TYPES, DeviceActivity, ProfileNote
from ..analyzers.occupancy import DEFAULT_WINDOW, OccupancyEstimate, estimate_occupancy
from ..decoders.dispatch import PacketDecoder
from ..decoders.flows import DEFAULT_IDLE_TIMEOUT
from ..decoders.types import DhcpEvent, DnsEvent, FlowRecord, HttpEvent, ProtocolEvent, TlsEvent, TlsStage
from ..ingest import open_capture
from ..knowledge import KnowledgeBundle
from ..policy import PolicyRule, Violation, evaluate_policies
from .. import topology
from .bus import TopicBus
from .compose import AttributeClaim, resolve_all
from .config import BASE_TOPICS, ChainConfig, ConfigError, default_chain_config, validate_chain
from .identity import IdentityBinder, IdentityResolver, is_host_address
from .profiles import DeviceProfile

log = logging.getLogger(__name__)

_TOPIC_OF = {DnsEvent: "dns", DhcpEvent: "dhcp", HttpEvent: "http", TlsEvent: "tls"}


@dataclass
class EventLog:
    flows: list[FlowRecord] = field(default_factory=list)
    dns: list[DnsEvent] = field(default_factory=list)
    dhcp: list[DhcpEvent] = field(default_factory=list)
    http: list[HttpEvent] = field(default_factory=list)
    tls: list[TlsEvent] = field(default_factory=list)
    resolver: IdentityResolver | None = None


@dataclass
class RunStats:
    packets: int = 0
    bytes: int = 0
    ingest_errors: int = 0
    decode: dict = field(default_factory=dict)
    topics: dict[str, int] = field(default_factory=dict)
    engines: dict[str, dict[str, int]] = field(default_factory=dict)
    claims: int = 0
    claims_unbound: int = 0
    knowledge_warnings: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "packets": self.packets,
            "bytes": self.bytes,
            "ingest_errors": self.ingest_errors,
            "decode": self.decode,
            "topics": dict(sorted(self.topics.items())),
            "engines": {k: dict(sorted(v.items())) for k, v in sorted(self.engines.items())},
            "claims": self.claims,
            "claims_unbound": self.claims_unbound,
            "knowledge_warnings": list(self.knowledge_warnings),
        }


@dataclass
class RunResult:
    profiles: dict[str, DeviceProfile]
    stats: RunStats
    claims: list[AttributeClaim]
    violations: list[Violation]
    occupancy: list[OccupancyEstimate]
    events: EventLog
    resolver: IdentityResolver
    l2: topology.L2Graph
    l3: topology.L3Graph
    dependencies: list[topology.DependencyEdge]
    resiliency: topology.ResiliencyReport
    span: tuple[float, float] | None = None


class RunContext:
    """Read-only view engines use to attribute events to devices."""

    def __init__(self, knowledge: KnowledgeBundle, resolver: IdentityResolver, last_seen: dict[str, float]):
        self.knowledge = knowledge
        self.resolver = resolver
        self.identities = resolver.identities
        self.device_keys = sorted(resolver.identities)
        self._last_seen = last_seen

    def _known(self, key: str | None) -> str | None:
        return key if key in self.identities else None

    def mac_of(self, key: str) -> str | None:
        ident = self.identities.get(key)
        return ident.mac if ident is not None else None

    def last_seen(self, key: str) -> float:
        return self._last_seen.get(key, 0.0)

    def device_for_event(self, ev: ProtocolEvent) -> str | None:
        r = self.resolver
        if isinstance(ev, DhcpEvent):
            return self._known(r.key_for_mac(ev.client_mac))
        server_side = (isinstance(ev, DnsEvent) and ev.is_response) or (
            isinstance(ev, TlsEvent) and ev.stage is TlsStage.CERTIFICATE)
        if server_side:
            return self._known(r.resolve(ev.dst_ip, ev.ts, ev.dst_mac))
        return self._known(r.resolve(ev.src_ip, ev.ts, ev.src_mac))

    def device_for_flow(self, fl: FlowRecord) -> str | None:
        return self._known(self.resolver.resolve(fl.originator[0], fl.first_ts, fl.orig_mac))


def _check_config(config: ChainConfig) -> None:
    validate_chain(config.engines)
    for e in config.engines:
        if e.type_name not in ENGINE_TYPES:
            raise ConfigError("UnknownEngine", f"{e.engine_id}: no engine type {e.type_name!r}")
    if config.composition.mode.value == "best" and config.composition.accuracy is None:
        raise ConfigError("Schema", "best-classifier composition needs an accuracy table")


def _open(source) -> tuple[Any, BinaryIO | None]:
    if isinstance(source, (str, os.PathLike)):
        fh = open(source, "rb")
        return open_capture(fh), fh
    return open_capture(source), None


def run_pipeline(source, config: ChainConfig | None = None, knowledge: KnowledgeBundle | None = None,
                 policies: list[PolicyRule] | None = None) -> RunResult:
    """Analyze one capture (path, bytes or binary stream).

    Raises ConfigError before reading any packet when the chain is invalid.
    """
    config = config if config is not None else default_chain_config()
    knowledge = knowledge if knowledge is not None else KnowledgeBundle()
    _check_config(config)
    params = config.params

    bus = TopicBus(BASE_TOPICS)
    for e in config.engines:
        for t in e.emits:
            bus.declare(t)
    subs = [bus.subscribe(*e.subscribes) if e.subscribes else None for e in config.engines]

    stats = RunStats(knowledge_warnings=list(knowledge.warnings))
    decoder = PacketDecoder(float(params.get("flow_timeout", DEFAULT_IDLE_TIMEOUT)))
    binder = IdentityBinder()
    l2 = topology.L2Graph()
    events = EventLog()
    pkt_ts: list[int] = []
    pkt_src: list[str | None] = []
    pkt_mac: list[str | None] = []
    pkt_len: list[int] = []

    reader, fh = _open(source)
    try:
        for rec in reader:
            pkt = decoder.feed(rec)
            stats.packets += 1
            stats.bytes += rec.original_len
            l2.add_frame(pkt.src_mac, pkt.dst_mac, pkt.src_ip, pkt.dst_ip)
            if pkt.src_ip is not None and pkt.src_mac is not None:
                binder.observe_packet(pkt.src_ip, pkt.src_mac, pkt.ts)
            pkt_ts.append(rec.ts_sec * 1_000_000 + rec.ts_usec)
            pkt_src.append(pkt.src_ip)
            pkt_mac.append(pkt.src_mac)
            pkt_len.append(rec.original_len)
            for ev in pkt.events:
                topic = _TOPIC_OF[type(ev)]
                getattr(events, topic).append(ev)
                if topic == "dhcp":
                    binder.observe_dhcp(ev)
                bus.publish(topic, ev)
            for fl in decoder.drain_flows():
                events.flows.append(fl)
                bus.publish("flow", fl)
        stats.ingest_errors = reader.ingest_stats()["errors"]
    finally:
        if fh is not None:
            fh.close()
    for fl in decoder.finish():
        events.flows.append(fl)
        bus.publish("flow", fl)
    stats.decode = decoder.stats.as_dict()

    resolver = binder.build()
    events.resolver = resolver
    identities = resolver.identities
    act_ts: dict[str, list[int]] = {}
    act_len: dict[str, list[int]] = {}
    for ts_us, ip, mac, size in zip(pkt_ts, pkt_src, pkt_mac, pkt_len):
        if ip is None:
            continue
        if is_host_address(ip):
            key = resolver.resolve(ip, ts_us / 1_000_000, mac)
        elif ip == "0.0.0.0" and mac:
            # DHCP clients before they hold an address
            key = resolver.key_for_mac(mac)
        else:
            key = None
        if key is None or key not in identities:
            continue
        act_ts.setdefault(key, []).append(ts_us)
        act_len.setdefault(key, []).append(size)
    for key in sorted(act_ts):
        bus.publish("activity", DeviceActivity(key, tuple(act_ts[key]), tuple(act_len[key])))
    first_seen = {k: min(v) / 1_000_000 for k, v in act_ts.items()}
    last_seen = {k: max(v) / 1_000_000 for k, v in act_ts.items()}

    ctx = RunContext(knowledge, resolver, last_seen)
    claims: list[AttributeClaim] = []
    behaviors: dict[str, Any] = {}
    notes: dict[str, dict[str, Any]] = {}
    for desc, sub in zip(config.engines, subs):
        engine = ENGINE_TYPES[desc.type_name](desc.engine_id, {**params, **desc.params}, ctx)
        received = emitted = 0
        if sub is not None:
            for msg in sub:
                engine.handle(msg.topic, msg.payload)
                received += 1
        allowed = set(desc.emits)
        for topic, payload in engine.finish():
            if topic not in allowed:
                continue
            bus.publish(topic, payload)
            emitted += 1
            if isinstance(payload, AttributeClaim):
                payload.check()
                if payload.device_key in identities:
                    claims.append(payload)
                else:
                    stats.claims_unbound += 1
            elif isinstance(payload, ProfileNote):
                notes.setdefault(payload.device_key, {})[payload.name] = payload.value
            elif topic == "behavior":
                behaviors[payload.device_key] = payload
        stats.engines[desc.engine_id] = {"received": received, "emitted": emitted}
    stats.claims = len(claims)
    stats.topics = dict(bus.published)

    resolved = resolve_all(claims, config.composition)
    by_device: dict[str, list[AttributeClaim]] = {}
    for c in claims:
        by_device.setdefault(c.device_key, []).append(c)
    counters = _counters(ctx, events, knowledge)
    profiles: dict[str, DeviceProfile] = {}
    for key in sorted(identities):
        ident = identities[key]
        fallback = next((e.start_ts for e in ident.epochs if e.start_ts is not None), None)
        c = counters.get(key, {"flows": 0, "bytes": 0, "dns_queries": 0, "distinct_dest_orgs": 0})
        c["unknown_tls_fingerprints"] = notes.get(key, {}).get("unknown_tls_fingerprints", [])
        profiles[key] = DeviceProfile(
            device_key=key,
            identity=ident,
            attributes=resolved.get(key, {}),
            claims=by_device.get(key, []),
            counters=c,
            behavior=behaviors.get(key),
            first_seen=first_seen.get(key, fallback),
            last_seen=last_seen.get(key, fallback),
        )

    violations = evaluate_policies(policies or [], profiles, events, knowledge, resolver)
    for v in violations:
        profiles[v.device_key].violations.append(v.rule_id)

    span = (min(pkt_ts) / 1_000_000, max(pkt_ts) / 1_000_000) if pkt_ts else None
    occupancy = []
    if span is not None:
        activity = {k: [t / 1_000_000 for t in v] for k, v in act_ts.items()}
        occupancy = estimate_occupancy(activity, knowledge.registry,
                                       float(params.get("occupancy_window", DEFAULT_WINDOW)), span,
                                       {k: identities[k].mac for k in activity})

    topology.infer_gateways(l2, gw_k=int(params.get("gw_k", topology.GW_K)))
    l3 = topology.build_l3(events.flows, resolver)
    deps = topology.infer_dependencies(events, resolver, int(params.get("min_evidence", topology.MIN_EVIDENCE)))
    report = topology.report_resiliency(l3, deps, int(params.get("hidden_k", topology.HIDDEN_K)),
                                        float(params.get("hidden_share", topology.HIDDEN_SHARE)))
    return RunResult(profiles, stats, claims, violations, occupancy, events, resolver, l2, l3, deps, report, span)


def _counters(ctx: RunContext, events: EventLog, knowledge: KnowledgeBundle) -> dict[str, dict]:
    out: dict[str, dict] = {}

    def slot(key: str) -> dict:
        if key not in out:
            out[key] = {"flows": 0, "bytes": 0, "dns_queries": 0, "distinct_dest_orgs": set()}
        return out[key]

    r = ctx.resolver
    for fl in events.flows:
        o = ctx._known(r.resolve(fl.originator[0], fl.first_ts, fl.orig_mac))
        p = ctx._known(r.resolve(fl.responder[0], fl.first_ts, fl.resp_mac))
        for key in {o, p} - {None}:
            s = slot(key)
            s["flows"] += 1
            s["bytes"] += fl.total_bytes
    for ev in events.dns:
        if ev.is_response:
            continue
        key = ctx._known(r.resolve(ev.src_ip, ev.ts, ev.src_mac))
        if key is None:
            continue
        s = slot(key)
        s["dns_queries"] += 1
        owner = knowledge.lookup_domain_owner(ev.query_name)
        if owner is not None:
            s["distinct_dest_orgs"].add(owner.org)
    for s in out.values():
        s["distinct_dest_orgs"] = len(s["distinct_dest_orgs"])
    return out
