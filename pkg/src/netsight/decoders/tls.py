"""TLS handshake metadata: ClientHello suites/SNI and certificate common names."""

from __future__ import annotations

import struct

from .types import Skip, TlsEvent, TlsStage, TransportSegment

CONTENT_HANDSHAKE = 22
HS_CLIENT_HELLO = 1
HS_CERTIFICATE = 11
EXT_SERVER_NAME = 0
OID_COMMON_NAME = b"\x55\x04\x03"

_STRING_CODECS = {
    0x0C: "utf-8",
    0x13: "ascii",
    0x16: "ascii",
    0x14: "latin-1",
    0x1E: "utf-16-be",
    0x1C: "utf-32-be",
}


class _Malformed(Exception):
    pass


class _DerError(Exception):
    pass


def _der_tlv(buf: bytes, off: int, end: int) -> tuple[int, int, int]:
    """Return (tag, content_start, content_end) of the TLV at ``off``."""
    if off + 2 > end:
        raise _DerError("short TLV")
    tag = buf[off]
    ln = buf[off + 1]
    off += 2
    if ln & 0x80:
        nbytes = ln & 0x7F
        if nbytes == 0 or nbytes > 4 or off + nbytes > end:
            raise _DerError("bad length")
        ln = int.from_bytes(buf[off:off + nbytes], "big")
        off += nbytes
    if off + ln > end:
        raise _DerError("content overrun")
    return tag, off, off + ln


def _children(buf: bytes, start: int, end: int):
    off = start
    while off < end:
        tag, cs, ce = _der_tlv(buf, off, end)
        yield tag, cs, ce
        off = ce


def _name_cn(buf: bytes, start: int, end: int) -> str | None:
    for set_tag, ss, se in _children(buf, start, end):
        if set_tag != 0x31:
            continue
        for seq_tag, qs, qe in _children(buf, ss, se):
            if seq_tag != 0x30:
                continue
            parts = list(_children(buf, qs, qe))
            if len(parts) < 2 or parts[0][0] != 0x06:
                continue
            if buf[parts[0][1]:parts[0][2]] != OID_COMMON_NAME:
                continue
            vtag, vs, ve = parts[1]
            codec = _STRING_CODECS.get(vtag, "latin-1")
            try:
                return buf[vs:ve].decode(codec)
            except UnicodeDecodeError:
                return buf[vs:ve].decode("latin-1")
    return None


def certificate_common_names(der: bytes) -> tuple[str | None, str | None]:
    """(issuer CN, subject CN) from a DER certificate; Nones when unreadable."""
    try:
        tag, cs, ce = _der_tlv(der, 0, len(der))
        if tag != 0x30:
            return None, None
        tag, ts, te = _der_tlv(der, cs, ce)
        if tag != 0x30:
            return None, None
        fields = list(_children(der, ts, te))
        if fields and fields[0][0] == 0xA0:
            fields = fields[1:]
        # serial, signature algorithm, issuer, validity, subject
        if len(fields) < 5:
            return None, None
        issuer, subject = fields[2], fields[4]
        if issuer[0] != 0x30 or subject[0] != 0x30:
            return None, None
        return _name_cn(der, issuer[1], issuer[2]), _name_cn(der, subject[1], subject[2])
    except _DerError:
        return None, None


def _parse_client_hello(body: bytes) -> tuple[tuple[int, ...], str | None]:
    n = len(body)
    off = 2 + 32
    if off + 1 > n:
        raise _Malformed("short ClientHello")
    off += 1 + body[off]
    if off + 2 > n:
        raise _Malformed("short ClientHello")
    cs_len = struct.unpack_from(">H", body, off)[0]
    off += 2
    if cs_len % 2 or off + cs_len > n:
        raise _Malformed("cipher suite length")
    suites = struct.unpack_from(f">{cs_len // 2}H", body, off)
    off += cs_len
    if off + 1 > n:
        raise _Malformed("compression methods")
    off += 1 + body[off]
    if off > n:
        raise _Malformed("compression methods")
    sni = None
    if off + 2 <= n:
        ext_total = struct.unpack_from(">H", body, off)[0]
        off += 2
        end = off + ext_total
        if end > n:
            raise _Malformed("extensions length")
        while off + 4 <= end:
            etype, elen = struct.unpack_from(">HH", body, off)
            off += 4
            if off + elen > end:
                raise _Malformed("extension overrun")
            if etype == EXT_SERVER_NAME and sni is None:
                sni = _parse_sni(body[off:off + elen])
            off += elen
    return tuple(suites), sni


def _parse_sni(ext: bytes) -> str | None:
    if len(ext) < 2:
        raise _Malformed("server_name list")
    total = struct.unpack_from(">H", ext)[0]
    if 2 + total > len(ext):
        raise _Malformed("server_name list")
    off = 2
    while off + 3 <= 2 + total:
        name_type = ext[off]
        ln = struct.unpack_from(">H", ext, off + 1)[0]
        off += 3
        if off + ln > 2 + total:
            raise _Malformed("server_name entry")
        if name_type == 0:
            return ext[off:off + ln].decode("ascii", "replace").lower().rstrip(".")
        off += ln
    return None


def _parse_certificate(body: bytes) -> tuple[str | None, str | None]:
    if len(body) < 3:
        raise _Malformed("certificate list")
    total = int.from_bytes(body[:3], "big")
    if 3 + total > len(body):
        raise _Malformed("certificate list")
    if total < 3:
        return None, None
    ln = int.from_bytes(body[3:6], "big")
    if 6 + ln > 3 + total:
        raise _Malformed("certificate entry")
    return certificate_common_names(body[6:6 + ln])


def _handshake_bytes(payload: bytes) -> tuple[bytes, bool] | Skip:
    """Concatenate leading handshake records; flag whether the last one is cut short."""
    if len(payload) < 5:
        return Skip("NotHandshake")
    if payload[0] != CONTENT_HANDSHAKE:
        return Skip("NotHandshake")
    chunks = []
    off = 0
    cut = False
    while off + 5 <= len(payload) and payload[off] == CONTENT_HANDSHAKE:
        rlen = struct.unpack_from(">H", payload, off + 3)[0]
        start = off + 5
        if start + rlen > len(payload):
            chunks.append(payload[start:])
            cut = True
            break
        chunks.append(payload[start:start + rlen])
        off = start + rlen
    return b"".join(chunks), cut


def decode_tls(seg: TransportSegment) -> TlsEvent | Skip:
    got = _handshake_bytes(seg.payload)
    if isinstance(got, Skip):
        return got
    hs, cut = got
    common = dict(
        ts=seg.ts, src_ip=seg.src_ip, dst_ip=seg.dst_ip, src_mac=seg.src_mac,
        dst_mac=seg.dst_mac, src_port=seg.src_port, dst_port=seg.dst_port,
    )
    off = 0
    try:
        while off + 4 <= len(hs):
            htype = hs[off]
            hlen = int.from_bytes(hs[off + 1:off + 4], "big")
            body_start = off + 4
            if body_start + hlen > len(hs):
                if cut:
                    return Skip("Incomplete")
                raise _Malformed("handshake length exceeds record")
            body = hs[body_start:body_start + hlen]
            if htype == HS_CLIENT_HELLO:
                suites, sni = _parse_client_hello(body)
                return TlsEvent(stage=TlsStage.CLIENT_HELLO, sni=sni, cipher_suites=suites, **common)
            if htype == HS_CERTIFICATE:
                issuer, subject = _parse_certificate(body)
                return TlsEvent(stage=TlsStage.CERTIFICATE, issuer_cn=issuer, subject_cn=subject, **common)
            off = body_start + hlen
    except _Malformed as exc:
        return Skip("Malformed", str(exc))
    if cut or off < len(hs):
        return Skip("Incomplete")
    return Skip("NoHandshakeOfInterest")
