"""Device identity binding: DHCP lease epochs and MAC observation per IP.

Device keys are strings: a MAC (``02:00:00:00:00:01``) when the device's
hardware address is known, else ``<ip>#<epoch>`` where epoch 0 is the
pseudo-epoch before any DHCP lease is seen for that address.
"""

from __future__ import annotations

import bisect
import ipaddress
from dataclasses import dataclass, field

from ..decoders.types import DhcpEvent, DhcpMessageType

_PRIVATE_NETS = tuple(
    ipaddress.IPv4Network(n) for n in ("10.0.0.0/8", "172.16.0.0/12", "192.168.0.0/16")
)
_NOT_A_HOST = {"0.0.0.0", "255.255.255.255"}


def is_rfc1918(ip: str) -> bool:
    try:
        addr = ipaddress.IPv4Address(ip)
    except ValueError:
        return False
    return any(addr in net for net in _PRIVATE_NETS)


def is_host_address(ip: str) -> bool:
    """False for unspecified, limited broadcast and multicast addresses."""
    if ip in _NOT_A_HOST:
        return False
    try:
        return not ipaddress.IPv4Address(ip).is_multicast
    except ValueError:
        return False


def ip_epoch_key(ip: str, epoch: int) -> str:
    return f"{ip}#{epoch}"


@dataclass
class Epoch:
    ip: str
    start_ts: float | None
    end_ts: float | None

    def covers(self, ts: float) -> bool:
        return (self.start_ts is None or ts >= self.start_ts) and (self.end_ts is None or ts < self.end_ts)

    def as_dict(self) -> dict:
        return {"ip": self.ip, "start": self.start_ts, "end": self.end_ts}


@dataclass
class DeviceIdentity:
    device_key: str
    mac: str | None = None
    epochs: list[Epoch] = field(default_factory=list)
    ambiguous: bool = False

    def covers(self, ts: float) -> bool:
        return any(e.covers(ts) for e in self.epochs)


class IdentityResolver:
    """Maps (ip, ts[, mac]) to a device key; immutable once built."""

    def __init__(self, identities: dict[str, DeviceIdentity], leases: dict[str, list[tuple[float, str]]],
                 static: dict[str, list[str]], internal: frozenset[str]):
        self.identities = identities
        self._leases = leases
        self._lease_ts = {ip: [t for t, _ in seq] for ip, seq in leases.items()}
        self._static = static
        self._internal = internal
        self._mac_keys = {i.mac: k for k, i in identities.items() if i.mac}

    def is_internal(self, ip: str) -> bool:
        return ip in self._internal or (is_rfc1918(ip) and is_host_address(ip))

    def key_for_mac(self, mac: str) -> str | None:
        return self._mac_keys.get(mac)

    def resolve(self, ip: str, ts: float, mac: str | None = None) -> str | None:
        """Device key for an internal address at time ``ts``; None for external addresses."""
        if not self.is_internal(ip):
            return None
        times = self._lease_ts.get(ip)
        if times:
            i = bisect.bisect_right(times, ts)
            if i == 0:
                return ip_epoch_key(ip, 0)
            return self._leases[ip][i - 1][1]
        macs = self._static.get(ip)
        if not macs:
            return ip_epoch_key(ip, 0)
        if mac is not None and mac in macs and len(macs) > 1:
            return mac
        return macs[0] if len(macs) >= 1 else ip_epoch_key(ip, 0)


class IdentityBinder:
    """Collects DHCP acknowledgements and (ip, mac, ts) sightings, then builds a resolver."""

    def __init__(self):
        self._acks: list[tuple[float, str, str]] = []
        self._sightings: dict[str, dict[str, list[float]]] = {}
        self._dhcp_clients: dict[str, float] = {}

    def observe_dhcp(self, ev: DhcpEvent) -> None:
        if ev.msg_type is DhcpMessageType.ACK and ev.assigned_ip:
            self._acks.append((ev.ts, ev.assigned_ip, ev.client_mac))
        self._dhcp_clients.setdefault(ev.client_mac, ev.ts)

    def observe_packet(self, src_ip: str, src_mac: str, ts: float) -> None:
        """Record that ``src_ip`` was the source address of a frame from ``src_mac``."""
        by_mac = self._sightings.get(src_ip)
        if by_mac is None:
            by_mac = self._sightings[src_ip] = {}
        span = by_mac.get(src_mac)
        if span is None:
            by_mac[src_mac] = [ts, ts]
        else:
            if ts < span[0]:
                span[0] = ts
            if ts > span[1]:
                span[1] = ts

    def build(self) -> IdentityResolver:
        acks = sorted(self._acks)
        leases: dict[str, list[tuple[float, str]]] = {}
        for ts, ip, mac in acks:
            seq = leases.setdefault(ip, [])
            # a renewal by the current holder continues the epoch
            if seq and seq[-1][1] == mac:
                continue
            seq.append((ts, mac))
        identities: dict[str, DeviceIdentity] = {}

        def ident(key: str, mac: str | None) -> DeviceIdentity:
            if key not in identities:
                identities[key] = DeviceIdentity(key, mac)
            return identities[key]

        for ip, seq in sorted(leases.items()):
            for i, (start, mac) in enumerate(seq):
                end = seq[i + 1][0] if i + 1 < len(seq) else None
                ident(mac, mac).epochs.append(Epoch(ip, start, end))
            first = seq[0][0]
            pre = [t for spans in self._sightings.get(ip, {}).values() for t in spans if t < first]
            if pre and is_host_address(ip):
                ident(ip_epoch_key(ip, 0), None).epochs.append(Epoch(ip, min(pre), first))
        internal = {ip for ip in leases}
        static: dict[str, list[str]] = {}
        for ip, by_mac in sorted(self._sightings.items()):
            if ip in leases or not is_host_address(ip) or not is_rfc1918(ip):
                continue
            macs = sorted(by_mac)
            static[ip] = macs
            start = min(s[0] for s in by_mac.values())
            end = max(s[1] for s in by_mac.values())
            if len(macs) == 1 or not macs:
                ident(macs[0], macs[0]).epochs.append(Epoch(ip, start, None))
                continue
            # several MACs claim this address without DHCP evidence: flag them all
            for mac in macs:
                node = ident(mac, mac)
                node.ambiguous = True
                node.epochs.append(Epoch(ip, by_mac[mac][0], None))
        for mac in sorted(self._dhcp_clients):
            if mac not in identities and any(m == mac for seq in leases.values() for _, m in seq):
                ident(mac, mac)
        for node in identities.values():
            node.epochs.sort(key=lambda e: (e.start_ts if e.start_ts is not None else float("-inf"), e.ip))
        return IdentityResolver(identities, leases, static, frozenset(internal))


def bind_identity(dhcp_events, sightings) -> IdentityResolver:
    """Build a resolver from DHCP events and ``(src_ip, src_mac, ts)`` sightings."""
    binder = IdentityBinder()
    for ev in dhcp_events:
        binder.observe_dhcp(ev)
    for ip, mac, ts in sightings:
        binder.observe_packet(ip, mac, ts)
    return binder.build()
