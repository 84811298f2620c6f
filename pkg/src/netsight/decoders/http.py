"""HTTP/1.x request-head decoding."""

from __future__ import annotations

from .types import HttpEvent, Skip, TransportSegment

METHODS = (b"GET ", b"POST ", b"PUT ", b"HEAD ", b"DELETE ", b"OPTIONS ")
MAX_HEAD = 8192


def decode_http(seg: TransportSegment) -> HttpEvent | Skip:
    payload = seg.payload
    if not payload.startswith(METHODS):
        return Skip("NotRequest")
    head = payload[:MAX_HEAD]
    end = head.find(b"\r\n\r\n")
    if end >= 0:
        head = head[:end]
    lines = head.decode("latin-1").replace("\r\n", "\n").split("\n")
    parts = lines[0].split(" ")
    if len(parts) < 2 or not parts[1]:
        return Skip("NotRequest")
    host = agent = None
    for line in lines[1:]:
        name, sep, value = line.partition(":")
        if not sep:
            continue
        name = name.strip().lower()
        if name == "host" and host is None:
            host = value.strip()
        elif name == "user-agent" and agent is None:
            agent = value.strip()
    return HttpEvent(
        ts=seg.ts,
        src_ip=seg.src_ip,
        dst_ip=seg.dst_ip,
        src_mac=seg.src_mac,
        dst_mac=seg.dst_mac,
        src_port=seg.src_port,
        dst_port=seg.dst_port,
        method=parts[0],
        uri=parts[1],
        host=host,
        user_agent=agent,
    )
