"""Just enough DER to build certificates with issuer and subject common names.

The signature is filler: nothing downstream verifies it, but the structure is
a well-formed X.509 v3 TBSCertificate wrapper.
"""

from __future__ import annotations

import hashlib


def tlv(tag: int, content: bytes) -> bytes:
    n = len(content)
    if n < 0x80:
        return bytes([tag, n]) + content
    raw = n.to_bytes((n.bit_length() + 7) // 8, "big")
    return bytes([tag, 0x80 | len(raw)]) + raw + content


def seq(*parts: bytes) -> bytes:
    return tlv(0x30, b"".join(parts))


_CN = tlv(0x06, b"\x55\x04\x03")
_O = tlv(0x06, b"\x55\x04\x0a")
_SHA256_RSA = seq(tlv(0x06, bytes.fromhex("2a864886f70d01010b")), b"\x05\x00")
_RSA = seq(tlv(0x06, bytes.fromhex("2a864886f70d010101")), b"\x05\x00")


def name(cn: str, org: str | None = None) -> bytes:
    rdns = []
    if org:
        rdns.append(tlv(0x31, seq(_O, tlv(0x0C, org.encode("utf-8")))))
    rdns.append(tlv(0x31, seq(_CN, tlv(0x0C, cn.encode("utf-8")))))
    return seq(*rdns)


def certificate(issuer_cn: str, subject_cn: str, serial: int = 1) -> bytes:
    digest = hashlib.sha256(f"{issuer_cn}|{subject_cn}|{serial}".encode()).digest()
    validity = seq(tlv(0x17, b"240101000000Z"), tlv(0x17, b"350101000000Z"))
    spki = seq(_RSA, tlv(0x03, b"\x00" + seq(tlv(0x02, b"\x00" + digest), tlv(0x02, b"\x01\x00\x01"))))
    tbs = seq(
        tlv(0xA0, tlv(0x02, b"\x02")),
        tlv(0x02, serial.to_bytes(max(1, (serial.bit_length() + 8) // 8), "big")),
        _SHA256_RSA,
        name(issuer_cn),
        validity,
        name(subject_cn),
        spki,
    )
    return seq(tbs, _SHA256_RSA, tlv(0x03, b"\x00" + digest * 2))
