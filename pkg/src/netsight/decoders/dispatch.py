"""Per-packet decode loop: headers, flows, and port-dispatched application events."""

from __future__ import annotations

import socket
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .. import _kernels
from ..ingest import PacketRecord
from .dhcp import decode_dhcp
from .dns import decode_dns
from .flows import DEFAULT_IDLE_TIMEOUT, FlowAssembler
from .http import decode_http
from .layers import _KERNEL_REASONS
from .tls import decode_tls
from .types import DecodeStats, FlowRecord, ProtocolEvent, Skip, Transport, TransportSegment

DNS_PORT = 53
DHCP_PORTS = (67, 68)
HTTP_PORTS = (80, 8080)
TLS_PORT = 443

_OK = _kernels.OK
_UNSUPPORTED = _kernels.UNSUPPORTED_PROTOCOL
_decode_headers = _kernels.decode_headers


@dataclass(slots=True)
class DecodedPacket:
    index: int
    ts: float
    src_mac: str | None = None
    dst_mac: str | None = None
    src_ip: str | None = None
    dst_ip: str | None = None
    payload_len: int = 0
    segment: TransportSegment | None = None
    skip: str | None = None
    events: list[ProtocolEvent] = field(default_factory=list)


def _seq_after(a: int, b: int) -> bool:
    """Serial-number comparison: True when ``a`` is strictly after ``b``."""
    return a != b and ((a - b) & 0xFFFFFFFF) < 0x80000000


class PacketDecoder:
    """Stateful decoder; feed records in capture order."""

    def __init__(self, flow_timeout: float = DEFAULT_IDLE_TIMEOUT):
        self.stats = DecodeStats()
        self.flows = FlowAssembler(flow_timeout)
        self._tcp_next: dict[tuple, int] = {}

    def feed(self, rec: PacketRecord) -> DecodedPacket:
        stats = self.stats
        stats.packets_in += 1
        data = rec.data
        ts = rec.ts_sec + rec.ts_usec / 1_000_000
        out = DecodedPacket(rec.index, ts)
        (status, _et, _s, _d, proto, _hl, _tl, _tr, sport, dport, flags, seq, _ips, pstart, pend) = (
            _decode_headers(data)
        )
        if len(data) >= 14:
            out.dst_mac = data[0:6].hex(":")
            out.src_mac = data[6:12].hex(":")
        if status != _OK:
            if status == _UNSUPPORTED:
                reason = f"UnsupportedProtocol:{proto}"
            else:
                reason = _KERNEL_REASONS[status]
            if status >= _UNSUPPORTED:
                out.src_ip = socket.inet_ntoa(data[26:30])
                out.dst_ip = socket.inet_ntoa(data[30:34])
            out.skip = reason
            stats.skip(reason)
            return out
        stats.decoded += 1
        src_ip = out.src_ip = socket.inet_ntoa(data[26:30])
        dst_ip = out.dst_ip = socket.inet_ntoa(data[30:34])
        payload = data[pstart:pend]
        out.payload_len = len(payload)
        kind = Transport.UDP if proto == 17 else Transport.TCP
        seg = TransportSegment(
            sport, dport, kind, payload,
            tcp_flags=flags if proto == 6 else None,
            tcp_seq=seq if proto == 6 else None,
            ts=ts, src_ip=src_ip, dst_ip=dst_ip, src_mac=out.src_mac, dst_mac=out.dst_mac,
        )
        out.segment = seg
        self.flows.add(ts, src_ip, sport, dst_ip, dport, kind, len(payload), out.src_mac, out.dst_mac)
        if kind is Transport.UDP:
            self._dispatch_udp(seg, out)
        elif payload:
            self._dispatch_tcp(seg, out)
        elif flags & 0x02:
            # SYN consumes one sequence number
            self._tcp_next[(src_ip, sport, dst_ip, dport)] = (seq + 1) & 0xFFFFFFFF
        return out

    def _record(self, proto: str, result, out: DecodedPacket) -> None:
        if isinstance(result, Skip):
            self.stats.app_skip(proto, result.reason)
        else:
            self.stats.app_event(proto)
            out.events.append(result)

    def _dispatch_udp(self, seg: TransportSegment, out: DecodedPacket) -> None:
        sp, dp = seg.src_port, seg.dst_port
        if sp == DNS_PORT or dp == DNS_PORT:
            self._record("dns", decode_dns(seg), out)
        elif sp in DHCP_PORTS or dp in DHCP_PORTS:
            self._record("dhcp", decode_dhcp(seg), out)

    def _dispatch_tcp(self, seg: TransportSegment, out: DecodedPacket) -> None:
        sp, dp = seg.src_port, seg.dst_port
        if dp in HTTP_PORTS:
            proto = "http"
        elif dp == TLS_PORT or sp == TLS_PORT:
            proto = "tls"
        else:
            return
        dir_key = (seg.src_ip, sp, seg.dst_ip, dp)
        expected = self._tcp_next.get(dir_key)
        end = (seg.tcp_seq + len(seg.payload)) & 0xFFFFFFFF
        if expected is not None and _seq_after(expected, seg.tcp_seq):
            self.stats.app_skip(proto, "Reordered")
            return
        self._tcp_next[dir_key] = end
        if proto == "http":
            self._record(proto, decode_http(seg), out)
        else:
            self._record(proto, decode_tls(seg), out)

    def drain_flows(self) -> list[FlowRecord]:
        flows = self.flows.drain()
        self.stats.flows += len(flows)
        return flows

    def finish(self) -> list[FlowRecord]:
        flows = self.flows.finish()
        self.stats.flows += len(flows)
        self._tcp_next.clear()
        return flows


def decode_capture(records: Iterable[PacketRecord], flow_timeout: float = DEFAULT_IDLE_TIMEOUT
                   ) -> Iterator[DecodedPacket | FlowRecord]:
    """Convenience stream of decoded packets interleaved with closed flows."""
    dec = PacketDecoder(flow_timeout)
    for rec in records:
        yield dec.feed(rec)
        yield from dec.drain_flows()
    yield from dec.finish()
