"""Byte-level encoders for the frames the generator emits."""

from __future__ import annotations

import socket
import struct

BROADCAST_MAC = "ff:ff:ff:ff:ff:ff"
ETH_IPV4 = 0x0800
PROTO_TCP = 6
PROTO_UDP = 17

TCP_FIN = 0x01
TCP_SYN = 0x02
TCP_PSH = 0x08
TCP_ACK = 0x10


def checksum16(data: bytes) -> int:
    if len(data) % 2:
        data += b"\x00"
    total = sum(struct.unpack(f"!{len(data) // 2}H", data))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def ethernet(src_mac: str, dst_mac: str, payload: bytes, ethertype: int = ETH_IPV4) -> bytes:
    return bytes.fromhex(dst_mac.replace(":", "")) + bytes.fromhex(src_mac.replace(":", "")) + \
        struct.pack("!H", ethertype) + payload


def ipv4(src_ip: str, dst_ip: str, proto: int, payload: bytes, ident: int = 0, ttl: int = 64) -> bytes:
    total = 20 + len(payload)
    src, dst = socket.inet_aton(src_ip), socket.inet_aton(dst_ip)
    head = struct.pack("!BBHHHBBH4s4s", 0x45, 0, total, ident & 0xFFFF, 0x4000, ttl, proto, 0, src, dst)
    head = head[:10] + struct.pack("!H", checksum16(head)) + head[12:]
    return head + payload


def _pseudo(src_ip: str, dst_ip: str, proto: int, length: int) -> bytes:
    return socket.inet_aton(src_ip) + socket.inet_aton(dst_ip) + struct.pack("!BBH", 0, proto, length)


def udp(src_ip: str, dst_ip: str, sport: int, dport: int, payload: bytes) -> bytes:
    length = 8 + len(payload)
    seg = struct.pack("!HHHH", sport, dport, length, 0) + payload
    csum = checksum16(_pseudo(src_ip, dst_ip, PROTO_UDP, length) + seg) or 0xFFFF
    return seg[:6] + struct.pack("!H", csum) + seg[8:]


def tcp(src_ip: str, dst_ip: str, sport: int, dport: int, seq: int, ack: int, flags: int,
        payload: bytes = b"", window: int = 65535) -> bytes:
    seg = struct.pack("!HHIIBBHHH", sport, dport, seq & 0xFFFFFFFF, ack & 0xFFFFFFFF, 5 << 4, flags,
                      window, 0, 0) + payload
    csum = checksum16(_pseudo(src_ip, dst_ip, PROTO_TCP, len(seg)) + seg)
    return seg[:16] + struct.pack("!H", csum) + seg[18:]


def frame_udp(src_mac, dst_mac, src_ip, dst_ip, sport, dport, payload, ident=0) -> bytes:
    return ethernet(src_mac, dst_mac, ipv4(src_ip, dst_ip, PROTO_UDP, udp(src_ip, dst_ip, sport, dport, payload), ident))


def frame_tcp(src_mac, dst_mac, src_ip, dst_ip, sport, dport, seq, ack, flags, payload=b"", ident=0) -> bytes:
    seg = tcp(src_ip, dst_ip, sport, dport, seq, ack, flags, payload)
    return ethernet(src_mac, dst_mac, ipv4(src_ip, dst_ip, PROTO_TCP, seg, ident))


# DNS

def dns_name(name: str) -> bytes:
    out = b""
    for label in name.rstrip(".").split("."):
        raw = label.encode("ascii")
        if not 0 < len(raw) < 64:
            raise ValueError(f"bad DNS label in {name!r}")
        out += bytes([len(raw)]) + raw
    return out + b"\x00"


def dns_query(txid: int, name: str, qtype: int = 1) -> bytes:
    return struct.pack("!HHHHHH", txid, 0x0100, 1, 0, 0, 0) + dns_name(name) + struct.pack("!HH", qtype, 1)


def dns_response(txid: int, name: str, addrs: list[str], qtype: int = 1, ttl: int = 300) -> bytes:
    """Answer records point back at the question name (offset 12) by compression."""
    msg = struct.pack("!HHHHHH", txid, 0x8180, 1, len(addrs), 0, 0) + dns_name(name) + struct.pack("!HH", qtype, 1)
    for ip in addrs:
        msg += struct.pack("!HHHIH", 0xC00C, 1, 1, ttl, 4) + socket.inet_aton(ip)
    return msg


# DHCP

DHCP_DISCOVER, DHCP_OFFER, DHCP_REQUEST, DHCP_ACK, DHCP_RELEASE = 1, 2, 3, 5, 7
DHCP_COOKIE = b"\x63\x82\x53\x63"


def dhcp_message(op: int, xid: int, client_mac: str, msg_type: int, *, ciaddr: str = "0.0.0.0",
                 yiaddr: str = "0.0.0.0", siaddr: str = "0.0.0.0", options: list[tuple[int, bytes]] = ()) -> bytes:
    chaddr = bytes.fromhex(client_mac.replace(":", "")) + b"\x00" * 10
    fixed = struct.pack("!BBBBIHH4s4s4s4s16s64s128s", op, 1, 6, 0, xid, 0, 0x8000,
                        socket.inet_aton(ciaddr), socket.inet_aton(yiaddr), socket.inet_aton(siaddr),
                        b"\x00" * 4, chaddr, b"\x00" * 64, b"\x00" * 128)
    opts = bytes([53, 1, msg_type])
    for code, value in options:
        opts += bytes([code, len(value)]) + value
    return fixed + DHCP_COOKIE + opts + b"\xff"


# HTTP

def http_request(method: str, uri: str, host: str, user_agent: str | None) -> bytes:
    lines = [f"{method} {uri} HTTP/1.1", f"Host: {host}"]
    if user_agent:
        lines.append(f"User-Agent: {user_agent}")
    lines.append("Accept: */*")
    return ("\r\n".join(lines) + "\r\n\r\n").encode("ascii")


def http_response(body_len: int) -> bytes:
    return f"HTTP/1.1 200 OK\r\nContent-Length: {body_len}\r\n\r\n".encode("ascii") + b"x" * body_len


# TLS

def _record(content_type: int, body: bytes) -> bytes:
    return struct.pack("!BHH", content_type, 0x0301, len(body)) + body


def _handshake(htype: int, body: bytes) -> bytes:
    return bytes([htype]) + len(body).to_bytes(3, "big") + body


def tls_client_hello(suites: tuple[int, ...], sni: str | None, random32: bytes) -> bytes:
    body = struct.pack("!H", 0x0303) + random32 + b"\x00"
    body += struct.pack("!H", 2 * len(suites)) + struct.pack(f"!{len(suites)}H", *suites)
    body += b"\x01\x00"
    exts = b""
    if sni:
        name = sni.encode("ascii")
        entry = b"\x00" + struct.pack("!H", len(name)) + name
        sni_body = struct.pack("!H", len(entry)) + entry
        exts += struct.pack("!HH", 0, len(sni_body)) + sni_body
    # supported_versions, opaque to the decoder
    exts += struct.pack("!HH", 43, 3) + b"\x02\x03\x04"
    body += struct.pack("!H", len(exts)) + exts
    return _record(22, _handshake(1, body))


def tls_server_flight(suite: int, random32: bytes, cert_der: bytes) -> bytes:
    hello = struct.pack("!H", 0x0303) + random32 + b"\x00" + struct.pack("!H", suite) + b"\x00" + b"\x00\x00"
    entry = len(cert_der).to_bytes(3, "big") + cert_der
    cert_body = len(entry).to_bytes(3, "big") + entry
    return _record(22, _handshake(2, hello) + _handshake(11, cert_body))


def tls_app_data(n: int) -> bytes:
    return _record(23, b"\x17" * n)
