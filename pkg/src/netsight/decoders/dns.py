"""DNS message decoding (header, first question, A answers)."""

from __future__ import annotations

import socket
import struct

from .types import DnsEvent, Skip, TransportSegment

MAX_POINTER_JUMPS = 32
MAX_NAME_LEN = 255


class _Malformed(Exception):
    pass


def read_name(msg: bytes, offset: int) -> tuple[str, int]:
    """Decode a possibly compressed name at ``offset``.

    Returns the lower-cased dotted name and the offset just past the name as
    it appears in place (after the first pointer, if any).
    """
    labels: list[str] = []
    jumps = 0
    end = None
    length = 0
    n = len(msg)
    while True:
        if offset >= n:
            raise _Malformed("name runs past end of message")
        ln = msg[offset]
        kind = ln & 0xC0
        if kind == 0xC0:
            if offset + 1 >= n:
                raise _Malformed("truncated pointer")
            jumps += 1
            if jumps > MAX_POINTER_JUMPS:
                raise _Malformed("pointer loop")
            if end is None:
                end = offset + 2
            offset = ((ln & 0x3F) << 8) | msg[offset + 1]
            continue
        if kind:
            raise _Malformed("reserved label type")
        if ln == 0:
            offset += 1
            break
        start = offset + 1
        stop = start + ln
        if stop > n:
            raise _Malformed("label overrun")
        length += ln + 1
        if length > MAX_NAME_LEN:
            raise _Malformed("name too long")
        labels.append(msg[start:stop].decode("latin-1").lower())
        offset = stop
    return ".".join(labels), (end if end is not None else offset)


def parse_dns(payload: bytes) -> tuple[str, int, bool, list[tuple[str, str]]]:
    if len(payload) < 12:
        raise _Malformed("short header")
    _id, flags, qdcount, ancount, _ns, _ar = struct.unpack_from(">HHHHHH", payload)
    is_response = bool(flags & 0x8000)
    off = 12
    qname, qtype = "", 0
    for i in range(qdcount):
        name, off = read_name(payload, off)
        if off + 4 > len(payload):
            raise _Malformed("question overrun")
        if i == 0:
            qname = name
            qtype = struct.unpack_from(">H", payload, off)[0]
        off += 4
    answers: list[tuple[str, str]] = []
    for _ in range(ancount):
        name, off = read_name(payload, off)
        if off + 10 > len(payload):
            raise _Malformed("answer header overrun")
        rtype, rclass, _ttl, rdlen = struct.unpack_from(">HHIH", payload, off)
        off += 10
        if off + rdlen > len(payload):
            raise _Malformed("rdata overrun")
        if rtype == 1 and rclass == 1 and rdlen == 4:
            answers.append((name, socket.inet_ntoa(payload[off:off + 4])))
        off += rdlen
    return qname, qtype, is_response, answers


def decode_dns(seg: TransportSegment) -> DnsEvent | Skip:
    try:
        qname, qtype, is_response, answers = parse_dns(seg.payload)
    except _Malformed as exc:
        return Skip("Malformed", str(exc))
    return DnsEvent(
        ts=seg.ts,
        src_ip=seg.src_ip,
        dst_ip=seg.dst_ip,
        src_mac=seg.src_mac,
        dst_mac=seg.dst_mac,
        src_port=seg.src_port,
        dst_port=seg.dst_port,
        query_name=qname,
        qtype=qtype,
        is_response=is_response,
        answers=tuple(answers) if is_response else (),
    )
