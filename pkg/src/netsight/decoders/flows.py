"""Bidirectional five-tuple flow assembly with idle timeout."""

from __future__ import annotations

import socket
from typing import Iterable, Iterator

from .types import FlowKey, FlowRecord, Transport, TransportSegment

DEFAULT_IDLE_TIMEOUT = 300.0

_ip_sort_cache: dict[str, bytes] = {}


def _ip_sort(ip: str) -> bytes:
    key = _ip_sort_cache.get(ip)
    if key is None:
        key = socket.inet_aton(ip)
        if len(_ip_sort_cache) < 1_000_000:
            _ip_sort_cache[ip] = key
    return key


def flow_key(src_ip: str, src_port: int, dst_ip: str, dst_port: int, kind: Transport) -> tuple[FlowKey, bool]:
    """Canonical key plus whether ``src`` is the key's first endpoint."""
    if (_ip_sort(src_ip), src_port) <= (_ip_sort(dst_ip), dst_port):
        return FlowKey(src_ip, src_port, dst_ip, dst_port, kind), True
    return FlowKey(dst_ip, dst_port, src_ip, src_port, kind), False


class FlowAssembler:
    """Folds packets into FlowRecords.

    A flow is closed when a packet arrives more than ``timeout`` seconds after
    the flow's last packet, or when :meth:`finish` is called. Closed flows
    accumulate in ``ready`` until drained.
    """

    def __init__(self, timeout: float = DEFAULT_IDLE_TIMEOUT):
        self.timeout = timeout
        self._active: dict[FlowKey, FlowRecord] = {}
        self.ready: list[FlowRecord] = []
        self.emitted = 0
        self._last_sweep = None

    def add(
        self,
        ts: float,
        src_ip: str,
        src_port: int,
        dst_ip: str,
        dst_port: int,
        kind: Transport,
        payload_len: int,
        src_mac: str = "",
        dst_mac: str = "",
    ) -> FlowRecord:
        key, _ = flow_key(src_ip, src_port, dst_ip, dst_port, kind)
        rec = self._active.get(key)
        if rec is not None and ts - rec.last_ts > self.timeout:
            self._close(key)
            rec = None
        if rec is None:
            rec = FlowRecord(key, (src_ip, src_port), ts, ts, orig_mac=src_mac, resp_mac=dst_mac)
            self._active[key] = rec
        if ts > rec.last_ts:
            rec.last_ts = ts
        if rec.originator[0] == src_ip and rec.originator[1] == src_port:
            rec.pkts_orig += 1
            rec.bytes_orig += payload_len
        else:
            rec.pkts_resp += 1
            rec.bytes_resp += payload_len
            if not rec.resp_mac:
                rec.resp_mac = src_mac
        self._maybe_sweep(ts)
        return rec

    def add_segment(self, seg: TransportSegment) -> FlowRecord:
        return self.add(seg.ts, seg.src_ip, seg.src_port, seg.dst_ip, seg.dst_port, seg.kind,
                        len(seg.payload), seg.src_mac, seg.dst_mac)

    def _close(self, key: FlowKey) -> None:
        self.ready.append(self._active.pop(key))
        self.emitted += 1

    def _maybe_sweep(self, now: float) -> None:
        # bounded memory on long captures: expire idle flows once per timeout period
        if self._last_sweep is None:
            self._last_sweep = now
            return
        if now - self._last_sweep <= self.timeout:
            return
        self._last_sweep = now
        stale = [k for k, r in self._active.items() if now - r.last_ts > self.timeout]
        stale.sort(key=lambda k: (self._active[k].first_ts, k))
        for k in stale:
            self._close(k)

    def drain(self) -> list[FlowRecord]:
        out, self.ready = self.ready, []
        return out

    def finish(self) -> list[FlowRecord]:
        for key in sorted(self._active, key=lambda k: (self._active[k].first_ts, k)):
            self.ready.append(self._active[key])
            self.emitted += 1
        self._active.clear()
        return self.drain()


def assemble_flows(
    segments: Iterable[TransportSegment], timeout: float = DEFAULT_IDLE_TIMEOUT
) -> Iterator[FlowRecord]:
    asm = FlowAssembler(timeout)
    for seg in segments:
        asm.add_segment(seg)
        yield from asm.drain()
    yield from asm.finish()
