"""DHCP (BOOTP) decoding: fixed fields plus options 53, 12, 60 and 55."""

from __future__ import annotations

import socket

from .layers import mac_str
from .types import DhcpEvent, DhcpMessageType, Skip, TransportSegment

MAGIC_COOKIE = b"\x63\x82\x53\x63"
FIXED_LEN = 236

_MSG_TYPES = {
    1: DhcpMessageType.DISCOVER,
    2: DhcpMessageType.OFFER,
    3: DhcpMessageType.REQUEST,
    5: DhcpMessageType.ACK,
    7: DhcpMessageType.RELEASE,
}


def parse_options(payload: bytes, start: int = FIXED_LEN + 4) -> dict[int, bytes] | None:
    """Options keyed by code (first occurrence wins); None on overrun."""
    opts: dict[int, bytes] = {}
    i = start
    n = len(payload)
    while i < n:
        code = payload[i]
        if code == 0:
            i += 1
            continue
        if code == 255:
            break
        if i + 1 >= n:
            return None
        ln = payload[i + 1]
        if i + 2 + ln > n:
            return None
        opts.setdefault(code, payload[i + 2:i + 2 + ln])
        i += 2 + ln
    return opts


def decode_dhcp(seg: TransportSegment) -> DhcpEvent | Skip:
    p = seg.payload
    if len(p) < FIXED_LEN + 4 or p[FIXED_LEN:FIXED_LEN + 4] != MAGIC_COOKIE:
        return Skip("NoCookie")
    opts = parse_options(p)
    if opts is None:
        return Skip("Malformed", "option overrun")
    raw_type = opts.get(53)
    if not raw_type or len(raw_type) != 1:
        return Skip("Malformed", "missing message type")
    msg_type = _MSG_TYPES.get(raw_type[0])
    if msg_type is None:
        return Skip("UnsupportedMessageType", str(raw_type[0]))
    yiaddr = p[16:20]
    assigned = socket.inet_ntoa(yiaddr) if yiaddr != b"\x00\x00\x00\x00" else None
    if msg_type is DhcpMessageType.ACK and assigned is None:
        return Skip("AckWithoutAddress")
    hostname = opts.get(12)
    vendor = opts.get(60)
    prl = opts.get(55)
    return DhcpEvent(
        ts=seg.ts,
        src_ip=seg.src_ip,
        dst_ip=seg.dst_ip,
        src_mac=seg.src_mac,
        dst_mac=seg.dst_mac,
        src_port=seg.src_port,
        dst_port=seg.dst_port,
        msg_type=msg_type,
        client_mac=mac_str(p[28:34]),
        assigned_ip=assigned,
        hostname=hostname.decode("utf-8", "replace") if hostname is not None else None,
        vendor_class=vendor.decode("utf-8", "replace") if vendor is not None else None,
        param_req_list=tuple(prl) if prl is not None else None,
    )
