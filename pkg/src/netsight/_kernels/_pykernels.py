"""Pure-Python hot kernels. ``_ckernels.pyx`` mirrors these exactly."""

from __future__ import annotations

import math
from typing import Sequence

OK = 0
TOO_SHORT = 1
NOT_IPV4_ETHERTYPE = 2
NOT_IPV4 = 3
BAD_IP_HEADER = 4
UNSUPPORTED_PROTOCOL = 5
TRUNCATED_TRANSPORT = 6
BAD_TCP_OFFSET = 7


def decode_headers(data: bytes) -> tuple:
    """Decode Ethernet II / IPv4 / TCP-or-UDP headers in one pass.

    Returns ``(status, ethertype, src_ip, dst_ip, proto, ip_hlen, ip_total_len,
    ip_truncated, sport, dport, tcp_flags, tcp_seq, ip_start, payload_start,
    payload_end)``; fields past the point of failure are zero.
    """
    n = len(data)
    if n < 14:
        return (TOO_SHORT, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0)
    ethertype = (data[12] << 8) | data[13]
    if ethertype != 0x0800:
        return (NOT_IPV4_ETHERTYPE, ethertype, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0)
    if n < 15 or (data[14] >> 4) != 4:
        return (NOT_IPV4, ethertype, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0)
    hlen = (data[14] & 0x0F) * 4
    if hlen < 20 or n < 14 + hlen:
        return (BAD_IP_HEADER, ethertype, 0, 0, 0, hlen, 0, 0, 0, 0, 0, 0, 0, 0, 0)
    total = (data[16] << 8) | data[17]
    if total < hlen:
        return (BAD_IP_HEADER, ethertype, 0, 0, 0, hlen, total, 0, 0, 0, 0, 0, 0, 0, 0)
    proto = data[23]
    src = int.from_bytes(data[26:30], "big")
    dst = int.from_bytes(data[30:34], "big")
    ip_start = 14 + hlen
    ip_end = 14 + total
    truncated = 0
    if ip_end > n:
        ip_end = n
        truncated = 1
    avail = ip_end - ip_start
    if proto == 17:
        if avail < 8:
            return (TRUNCATED_TRANSPORT, ethertype, src, dst, proto, hlen, total, truncated, 0, 0, 0, 0, ip_start, 0, 0)
        sport = (data[ip_start] << 8) | data[ip_start + 1]
        dport = (data[ip_start + 2] << 8) | data[ip_start + 3]
        return (OK, ethertype, src, dst, proto, hlen, total, truncated, sport, dport, 0, 0, ip_start, ip_start + 8, ip_end)
    if proto == 6:
        if avail < 20:
            return (TRUNCATED_TRANSPORT, ethertype, src, dst, proto, hlen, total, truncated, 0, 0, 0, 0, ip_start, 0, 0)
        sport = (data[ip_start] << 8) | data[ip_start + 1]
        dport = (data[ip_start + 2] << 8) | data[ip_start + 3]
        seq = int.from_bytes(data[ip_start + 4:ip_start + 8], "big")
        doff = (data[ip_start + 12] >> 4) * 4
        flags = data[ip_start + 13]
        if doff < 20:
            return (BAD_TCP_OFFSET, ethertype, src, dst, proto, hlen, total, truncated, sport, dport, flags, seq, ip_start, 0, 0)
        if doff > avail:
            return (TRUNCATED_TRANSPORT, ethertype, src, dst, proto, hlen, total, truncated, sport, dport, flags, seq, ip_start, 0, 0)
        return (OK, ethertype, src, dst, proto, hlen, total, truncated, sport, dport, flags, seq, ip_start, ip_start + doff, ip_end)
    return (UNSUPPORTED_PROTOCOL, ethertype, src, dst, proto, hlen, total, truncated, 0, 0, 0, 0, ip_start, 0, 0)


def periodicity_score(series: Sequence[float]) -> float:
    """Max uncentred normalized autocorrelation over lags 2..len//2.

    For lag k the overlapping segments ``x[:-k]`` and ``x[k:]`` are compared by
    cosine similarity, so a constant non-zero series scores 1.0 and an all-zero
    series scores 0.0.
    """
    n = len(series)
    best = 0.0
    for k in range(2, n // 2 + 1):
        num = 0.0
        ea = 0.0
        eb = 0.0
        for i in range(n - k):
            a = series[i]
            b = series[i + k]
            num += a * b
            ea += a * a
            eb += b * b
        if ea > 0.0 and eb > 0.0:
            r = num / math.sqrt(ea * eb)
            if r > best:
                best = r
    if best > 1.0:
        best = 1.0
    return best
