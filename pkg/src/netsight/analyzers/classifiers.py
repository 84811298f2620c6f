"""Per-device heuristic classifiers that turn protocol events into attribute claims."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..decoders.types import DhcpEvent, DhcpMessageType, DnsEvent, HttpEvent, TlsEvent, TlsStage
from ..knowledge import DomainOwnershipTable, KnowledgeBundle, UaRuleSet
from ..pipeline.compose import ATTRIBUTES, AttributeClaim

DEFAULTS = {
    "min_queries": 5,
    "iot_dominance": 0.8,
    "iot_max_orgs": 3,
    "iot_conf_min": 0.5,
    "iot_conf_max": 0.99,
    "conf_oui": 0.9,
    "conf_ua": 0.8,
    "conf_dhcp_vendor": 0.7,
    "conf_tls_stack": 0.7,
    "conf_tls_issuer": 0.6,
    "conf_dns_org": 0.5,
    "dns_org_dominance": 0.8,
}


@dataclass
class DnsUsageSummary:
    device_key: str
    total_queries: int = 0
    owned_queries: int = 0
    distinct_domains: int = 0
    distinct_orgs: int = 0
    org_histogram: dict[str, int] = field(default_factory=dict)
    unresolved_fraction: float = 0.0
    name_ips: dict[str, set[str]] = field(default_factory=dict)
    last_ts: float | None = None

    @property
    def dominance(self) -> float:
        if not self.owned_queries:
            return 0.0
        return max(self.org_histogram.values()) / self.owned_queries

    @property
    def dominant_org(self) -> str | None:
        if not self.org_histogram:
            return None
        top = max(self.org_histogram.values())
        return min(org for org, n in self.org_histogram.items() if n == top)


def summarize_dns(device_key: str, events: Iterable[DnsEvent], domains: DomainOwnershipTable) -> DnsUsageSummary:
    """Summarize a device's DNS use. Queries are counted; responses feed the name cache."""
    s = DnsUsageSummary(device_key)
    names: set[str] = set()
    hist: Counter[str] = Counter()
    unresolved = 0
    for ev in events:
        if s.last_ts is None or ev.ts > s.last_ts:
            s.last_ts = ev.ts
        if ev.is_response:
            for name, ip in ev.answers:
                s.name_ips.setdefault(name, set()).add(ip)
            continue
        s.total_queries += 1
        names.add(ev.query_name)
        owner = domains.lookup(ev.query_name)
        if owner is None:
            unresolved += 1
        else:
            hist[owner.org] += 1
    s.org_histogram = dict(sorted(hist.items()))
    s.owned_queries = sum(hist.values())
    s.distinct_domains = len(names)
    s.distinct_orgs = len(hist)
    s.unresolved_fraction = unresolved / s.total_queries if s.total_queries else 0.0
    return s


def classify_iot(device_key: str, summary: DnsUsageSummary, flows: Sequence = (), *,
                 engine_id: str = "iot", params: dict | None = None) -> AttributeClaim | None:
    """Single-organization DNS use marks a device as IoT.

    Silent below ``min_queries`` owned-domain queries.
    """
    p = {**DEFAULTS, **(params or {})}
    if summary.owned_queries < p["min_queries"]:
        return None
    d = summary.dominance
    is_iot = d >= p["iot_dominance"] and summary.distinct_orgs <= p["iot_max_orgs"]
    conf = d if is_iot else 1.0 - d
    conf = min(max(conf, p["iot_conf_min"]), p["iot_conf_max"])
    return AttributeClaim(device_key, "is_iot", "true" if is_iot else "false", conf, engine_id,
                          summary.last_ts or 0.0)


def _most_common(values: Iterable[str]) -> str | None:
    counts = Counter(values)
    if not counts:
        return None
    top = max(counts.values())
    return min(v for v, n in counts.items() if n == top)


def infer_manufacturer(
    device_key: str,
    mac: str | None,
    knowledge: KnowledgeBundle,
    dhcp_events: Sequence[DhcpEvent] = (),
    tls_events: Sequence[TlsEvent] = (),
    summary: DnsUsageSummary | None = None,
    *,
    last_seen: float = 0.0,
    engine_id: str = "manufacturer",
    params: dict | None = None,
) -> list[AttributeClaim]:
    """One manufacturer claim per evidence source: OUI, DHCP vendor class, certificate issuer, DNS org."""
    p = {**DEFAULTS, **(params or {})}
    claims = []
    if mac:
        vendor = knowledge.lookup_vendor(mac).vendor
        if vendor:
            claims.append(AttributeClaim(device_key, "manufacturer", vendor, p["conf_oui"],
                                         f"{engine_id}.oui", last_seen))
    mapped = [(knowledge.normalize_vendor(ev.vendor_class), ev.ts) for ev in dhcp_events if ev.vendor_class]
    vendor = _most_common(v for v, _ in mapped if v)
    if vendor:
        ts = max(ev.ts for ev in dhcp_events)
        claims.append(AttributeClaim(device_key, "manufacturer", vendor, p["conf_dhcp_vendor"],
                                     f"{engine_id}.dhcp", ts))
    issuers = [(knowledge.normalize_vendor(ev.issuer_cn), ev.ts) for ev in tls_events
               if ev.stage is TlsStage.CERTIFICATE and ev.issuer_cn]
    vendor = _most_common(v for v, _ in issuers if v)
    if vendor:
        ts = max(t for v, t in issuers if v == vendor)
        claims.append(AttributeClaim(device_key, "manufacturer", vendor, p["conf_tls_issuer"],
                                     f"{engine_id}.tls", ts))
    if summary is not None and summary.owned_queries and summary.dominance >= p["dns_org_dominance"]:
        org = summary.dominant_org
        vendor = knowledge.normalize_vendor(org) or org
        claims.append(AttributeClaim(device_key, "manufacturer", vendor, p["conf_dns_org"],
                                     f"{engine_id}.dns", summary.last_ts or last_seen))
    return claims


def mine_user_agent(device_key: str, events: Iterable[HttpEvent], rules: UaRuleSet, *,
                    engine_id: str = "useragent", params: dict | None = None) -> list[AttributeClaim]:
    p = {**DEFAULTS, **(params or {})}
    last: dict[str, float] = {}
    for ev in events:
        if ev.user_agent:
            last[ev.user_agent] = max(ev.ts, last.get(ev.user_agent, ev.ts))
    claims = []
    for ua in sorted(last):
        match = rules.match(ua)
        if match is None:
            continue
        for attr, value in sorted(match.attrs.items()):
            if attr in ATTRIBUTES:
                claims.append(AttributeClaim(device_key, attr, value, p["conf_ua"], engine_id, last[ua]))
    return claims


def cipher_fingerprint(suites: Sequence[int]) -> str:
    return "-".join(f"{s:04x}" for s in suites)


def fingerprint_tls(device_key: str, events: Iterable[TlsEvent], fingerprints: dict[str, str], *,
                    engine_id: str = "tls_fingerprint", params: dict | None = None
                    ) -> tuple[list[AttributeClaim], list[str]]:
    """Claims for known ClientHello fingerprints, plus the sorted unknown ones."""
    p = {**DEFAULTS, **(params or {})}
    last: dict[str, float] = {}
    for ev in events:
        if ev.stage is TlsStage.CLIENT_HELLO and ev.cipher_suites is not None:
            fp = cipher_fingerprint(ev.cipher_suites)
            last[fp] = max(ev.ts, last.get(fp, ev.ts))
    claims, unknown = [], []
    for fp in sorted(last):
        stack = fingerprints.get(fp)
        if stack is None:
            unknown.append(fp)
        else:
            claims.append(AttributeClaim(device_key, "stack", stack, p["conf_tls_stack"], engine_id, last[fp]))
    return claims, unknown


def dhcp_client_events(events: Iterable[DhcpEvent]) -> list[DhcpEvent]:
    """Messages a client sends about itself (vendor class lives here)."""
    return [ev for ev in events if ev.msg_type in (DhcpMessageType.DISCOVER, DhcpMessageType.REQUEST,
                                                   DhcpMessageType.RELEASE)]
