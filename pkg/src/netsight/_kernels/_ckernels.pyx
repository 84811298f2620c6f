# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled twins of the kernels in ``_pykernels``; results must match exactly."""

from libc.math cimport sqrt
from libc.stdlib cimport malloc, free

cdef enum:
    OK = 0
    TOO_SHORT = 1
    NOT_IPV4_ETHERTYPE = 2
    NOT_IPV4 = 3
    BAD_IP_HEADER = 4
    UNSUPPORTED_PROTOCOL = 5
    TRUNCATED_TRANSPORT = 6
    BAD_TCP_OFFSET = 7


def decode_headers(bytes data):
    cdef const unsigned char* p = data
    cdef Py_ssize_t n = len(data)
    cdef unsigned int ethertype, hlen, total, proto, sport, dport, flags, doff
    cdef unsigned long src, dst, seq
    cdef Py_ssize_t ip_start, ip_end, avail
    cdef int truncated = 0
    if n < 14:
        return (TOO_SHORT, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0)
    ethertype = (p[12] << 8) | p[13]
    if ethertype != 0x0800:
        return (NOT_IPV4_ETHERTYPE, ethertype, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0)
    if n < 15 or (p[14] >> 4) != 4:
        return (NOT_IPV4, ethertype, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0)
    hlen = (p[14] & 0x0F) * 4
    if hlen < 20 or n < 14 + hlen:
        return (BAD_IP_HEADER, ethertype, 0, 0, 0, hlen, 0, 0, 0, 0, 0, 0, 0, 0, 0)
    total = (p[16] << 8) | p[17]
    if total < hlen:
        return (BAD_IP_HEADER, ethertype, 0, 0, 0, hlen, total, 0, 0, 0, 0, 0, 0, 0, 0)
    proto = p[23]
    src = (<unsigned long>p[26] << 24) | (<unsigned long>p[27] << 16) | (<unsigned long>p[28] << 8) | p[29]
    dst = (<unsigned long>p[30] << 24) | (<unsigned long>p[31] << 16) | (<unsigned long>p[32] << 8) | p[33]
    ip_start = 14 + hlen
    ip_end = 14 + total
    if ip_end > n:
        ip_end = n
        truncated = 1
    avail = ip_end - ip_start
    if proto == 17:
        if avail < 8:
            return (TRUNCATED_TRANSPORT, ethertype, src, dst, proto, hlen, total, truncated, 0, 0, 0, 0, ip_start, 0, 0)
        sport = (p[ip_start] << 8) | p[ip_start + 1]
        dport = (p[ip_start + 2] << 8) | p[ip_start + 3]
        return (OK, ethertype, src, dst, proto, hlen, total, truncated, sport, dport, 0, 0, ip_start, ip_start + 8, ip_end)
    if proto == 6:
        if avail < 20:
            return (TRUNCATED_TRANSPORT, ethertype, src, dst, proto, hlen, total, truncated, 0, 0, 0, 0, ip_start, 0, 0)
        sport = (p[ip_start] << 8) | p[ip_start + 1]
        dport = (p[ip_start + 2] << 8) | p[ip_start + 3]
        seq = ((<unsigned long>p[ip_start + 4] << 24) | (<unsigned long>p[ip_start + 5] << 16)
               | (<unsigned long>p[ip_start + 6] << 8) | p[ip_start + 7])
        doff = (p[ip_start + 12] >> 4) * 4
        flags = p[ip_start + 13]
        if doff < 20:
            return (BAD_TCP_OFFSET, ethertype, src, dst, proto, hlen, total, truncated, sport, dport, flags, seq, ip_start, 0, 0)
        if doff > avail:
            return (TRUNCATED_TRANSPORT, ethertype, src, dst, proto, hlen, total, truncated, sport, dport, flags, seq, ip_start, 0, 0)
        return (OK, ethertype, src, dst, proto, hlen, total, truncated, sport, dport, flags, seq, ip_start, ip_start + doff, ip_end)
    return (UNSUPPORTED_PROTOCOL, ethertype, src, dst, proto, hlen, total, truncated, 0, 0, 0, 0, ip_start, 0, 0)


def periodicity_score(series):
    cdef Py_ssize_t n = len(series)
    cdef Py_ssize_t i, k
    cdef double a, b, num, ea, eb, r
    cdef double best = 0.0
    cdef double* x
    if n < 4:
        return 0.0
    x = <double*>malloc(n * sizeof(double))
    if x == NULL:
        raise MemoryError()
    try:
        for i in range(n):
            x[i] = series[i]
        for k in range(2, n // 2 + 1):
            num = 0.0
            ea = 0.0
            eb = 0.0
            for i in range(n - k):
                a = x[i]
                b = x[i + k]
                num += a * b
                ea += a * a
                eb += b * b
            if ea > 0.0 and eb > 0.0:
                r = num / sqrt(ea * eb)
                if r > best:
                    best = r
    finally:
        free(x)
    if best > 1.0:
        best = 1.0
    return best
