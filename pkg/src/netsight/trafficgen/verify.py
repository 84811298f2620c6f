"""Check that every label in a sidecar is backed by something in its capture."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field

from ..decoders import DhcpEvent, DhcpMessageType, DnsEvent, HttpEvent, PacketDecoder, TlsEvent, TlsStage
from ..ingest import open_capture
from .world import VENDORS

log = logging.getLogger(__name__)

# application payloads the decoders look at but have no event for
BENIGN_SKIPS = frozenset({"NotHandshake", "NoHandshakeOfInterest", "NotRequest"})


class SelfCheckFailure(Exception):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("unevidenced labels: " + "; ".join(problems))


@dataclass
class SelfCheckReport:
    packets: int = 0
    devices: int = 0
    checked: int = 0
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems


@dataclass
class _Seen:
    frames: int = 0
    dns: Counter = field(default_factory=Counter)
    user_agents: set = field(default_factory=set)
    hellos: int = 0
    acks: list = field(default_factory=list)
    vendor_classes: set = field(default_factory=set)


def _evidence(pcap: bytes) -> tuple[int, int, dict[str, _Seen]]:
    dec = PacketDecoder()
    seen: dict[str, _Seen] = {}
    n = 0
    for rec in open_capture(pcap):
        n += 1
        pkt = dec.feed(rec)
        if pkt.src_mac is None:
            continue
        s = seen.setdefault(pkt.src_mac, _Seen())
        s.frames += 1
        for ev in pkt.events:
            if isinstance(ev, DnsEvent) and not ev.is_response:
                s.dns[ev.query_name] += 1
            elif isinstance(ev, HttpEvent) and ev.user_agent:
                s.user_agents.add(ev.user_agent)
            elif isinstance(ev, TlsEvent) and ev.stage is TlsStage.CLIENT_HELLO:
                s.hellos += 1
            elif isinstance(ev, DhcpEvent):
                target = seen.setdefault(ev.client_mac, _Seen())
                if ev.msg_type is DhcpMessageType.ACK:
                    target.acks.append((ev.ts, ev.assigned_ip))
                if ev.vendor_class:
                    target.vendor_classes.add(ev.vendor_class)
    skips = sum(dec.stats.skipped.values())
    skips += sum(n for reason, n in dec.stats.app_skips.items() if reason.split(":")[-1] not in BENIGN_SKIPS)
    return n, skips, seen


def verify_sidecar(pcap: bytes, sidecar: dict) -> SelfCheckReport:
    """Re-decode ``pcap`` and confirm the sidecar's device labels are evidenced.

    Raises SelfCheckFailure listing every unevidenced label.
    """
    report = SelfCheckReport()
    if not pcap and not sidecar:
        return report
    n, skips, seen = _evidence(pcap)
    report.packets = n
    problems = report.problems
    if skips:
        problems.append(f"capture has {skips} decoder skips")
    if sidecar.get("packets", n) != n:
        problems.append(f"sidecar says {sidecar.get('packets')} packets, capture has {n}")
    vendors_by_name = {v.name: v for v in VENDORS.values()}
    for dev in sidecar.get("devices", []):
        key = dev.get("device_key", "?")
        report.devices += 1
        s = seen.get(key)
        if s is None or not s.frames:
            problems.append(f"{key}: no frames from this device")
            continue
        labels = dev.get("labels", {})
        report.checked += len(labels)
        vendor = vendors_by_name.get(labels.get("manufacturer", ""))
        if "manufacturer" in labels and (vendor is None or not key.startswith(vendor.oui)):
            problems.append(f"{key}: manufacturer {labels['manufacturer']} not backed by its OUI")
        ua_attrs = {k: labels[k] for k in ("os", "browser", "device_type") if k in labels}
        if ua_attrs and not (vendor and vendor.user_agent in s.user_agents):
            problems.append(f"{key}: {sorted(ua_attrs)} labelled without a matching user agent")
        if "stack" in labels and not s.hellos:
            problems.append(f"{key}: stack labelled but no ClientHello seen")
        if "is_iot" in labels and sum(s.dns.values()) < 5:
            problems.append(f"{key}: is_iot labelled with fewer than 5 DNS queries")
        if dev.get("dhcp") and not s.acks:
            problems.append(f"{key}: DHCP device without an Ack")
    for ep in sidecar.get("epochs", []):
        s = seen.get(ep["mac"])
        if s is None or not any(ip == ep["ip"] and abs(ts - ep["start"]) < 1e-6 for ts, ip in s.acks):
            problems.append(f"epoch {ep['ip']}@{ep['start']}: no matching Ack from {ep['mac']}")
    keys = {d.get("device_key") for d in sidecar.get("devices", [])}
    for v in sidecar.get("violations", []):
        if v.get("device_key") not in keys:
            problems.append(f"violation {v.get('rule_id')} names unknown device {v.get('device_key')}")
    if problems:
        log.debug("self-check failed: %s", problems)
        raise SelfCheckFailure(problems)
    return report
