"""Ethernet, IPv4 and TCP/UDP header decoding."""

from __future__ import annotations

import socket
import struct

from .. import _kernels
from ..ingest import PacketRecord
from .types import EthernetFrame, Ipv4Datagram, Skip, Transport, TransportSegment

ETHERTYPE_IPV4 = 0x0800

_KERNEL_REASONS = {
    _kernels.TOO_SHORT: "TooShort",
    _kernels.NOT_IPV4_ETHERTYPE: "NotIPv4Ethertype",
    _kernels.NOT_IPV4: "NotIPv4",
    _kernels.BAD_IP_HEADER: "BadIPHeader",
    _kernels.TRUNCATED_TRANSPORT: "TruncatedTransport",
    _kernels.BAD_TCP_OFFSET: "BadTCPOffset",
}


def mac_str(raw: bytes) -> str:
    return raw.hex(":")


def mac_bytes(mac: str) -> bytes:
    return bytes.fromhex(mac.replace(":", "").replace("-", ""))


def is_group_mac(mac: str) -> bool:
    """Broadcast and multicast destinations have the I/G bit set."""
    return bool(int(mac[:2], 16) & 0x01)


def decode_ethernet(p: PacketRecord) -> EthernetFrame | Skip:
    data = p.data
    if len(data) < 14:
        return Skip("TooShort")
    ethertype = (data[12] << 8) | data[13]
    if ethertype != ETHERTYPE_IPV4:
        return Skip("NotIPv4Ethertype", f"0x{ethertype:04x}")
    return EthernetFrame(mac_str(data[6:12]), mac_str(data[0:6]), ethertype, data[14:], p.ts)


def decode_ipv4(f: EthernetFrame) -> Ipv4Datagram | Skip:
    b = f.payload
    if not b or (b[0] >> 4) != 4:
        return Skip("NotIPv4")
    hlen = (b[0] & 0x0F) * 4
    if hlen < 20 or len(b) < hlen:
        return Skip("BadIPHeader")
    total = struct.unpack_from(">H", b, 2)[0]
    if total < hlen:
        return Skip("BadIPHeader")
    end = min(total, len(b))
    return Ipv4Datagram(
        src_ip=socket.inet_ntoa(b[12:16]),
        dst_ip=socket.inet_ntoa(b[16:20]),
        protocol=b[9],
        header_len=hlen,
        total_len=total,
        payload=b[hlen:end],
        truncated=total > len(b),
        ts=f.ts,
        src_mac=f.src_mac,
        dst_mac=f.dst_mac,
    )


def decode_transport(d: Ipv4Datagram) -> TransportSegment | Skip:
    b = d.payload
    common = dict(ts=d.ts, src_ip=d.src_ip, dst_ip=d.dst_ip, src_mac=d.src_mac, dst_mac=d.dst_mac)
    if d.protocol == 17:
        if len(b) < 8:
            return Skip("TruncatedTransport")
        sport, dport = struct.unpack_from(">HH", b)
        return TransportSegment(sport, dport, Transport.UDP, b[8:], **common)
    if d.protocol == 6:
        if len(b) < 20:
            return Skip("TruncatedTransport")
        sport, dport, seq = struct.unpack_from(">HHI", b)
        doff = (b[12] >> 4) * 4
        if doff < 20:
            return Skip("BadTCPOffset")
        if doff > len(b):
            return Skip("TruncatedTransport")
        return TransportSegment(sport, dport, Transport.TCP, b[doff:], tcp_flags=b[13], tcp_seq=seq, **common)
    return Skip(f"UnsupportedProtocol:{d.protocol}")


def decode_packet(p: PacketRecord) -> TransportSegment | Skip:
    """All three header layers at once through the compiled kernel."""
    data = p.data
    (status, _et, _src, _dst, proto, _hl, _tl, _tr, sport, dport, flags, seq, _ips, pstart, pend) = (
        _kernels.decode_headers(data)
    )
    if status != _kernels.OK:
        if status == _kernels.UNSUPPORTED_PROTOCOL:
            return Skip(f"UnsupportedProtocol:{proto}")
        return Skip(_KERNEL_REASONS[status])
    common = dict(
        ts=p.ts,
        src_ip=socket.inet_ntoa(data[26:30]),
        dst_ip=socket.inet_ntoa(data[30:34]),
        src_mac=mac_str(data[6:12]),
        dst_mac=mac_str(data[0:6]),
    )
    if proto == 17:
        return TransportSegment(sport, dport, Transport.UDP, data[pstart:pend], **common)
    return TransportSegment(sport, dport, Transport.TCP, data[pstart:pend], tcp_flags=flags, tcp_seq=seq, **common)


def decode_layers(p: PacketRecord) -> TransportSegment | Skip:
    """Reference route: Ethernet, then IPv4, then transport, one object per layer."""
    frame = decode_ethernet(p)
    if isinstance(frame, Skip):
        return frame
    dgram = decode_ipv4(frame)
    if isinstance(dgram, Skip):
        return dgram
    return decode_transport(dgram)
