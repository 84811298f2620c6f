"""Classic pcap capture reading and writing.

Only the microsecond-resolution pcap format is accepted (magic 0xA1B2C3D4 in
either byte order); pcapng and the nanosecond variant are rejected.
"""

from __future__ import annotations

import io
import logging
import struct
from dataclasses import dataclass
from enum import Enum
from typing import BinaryIO, Iterable, Iterator

logger = logging.getLogger(__name__)

PCAP_MAGIC = 0xA1B2C3D4
PCAP_MAGIC_NS = 0xA1B23C4D
LINKTYPE_ETHERNET = 1
GLOBAL_HEADER_LEN = 24
RECORD_HEADER_LEN = 16


class IngestError(Exception):
    pass


class UnknownMagic(IngestError):
    pass


class UnsupportedLinkType(IngestError):
    pass


class TruncatedHeader(IngestError):
    pass


class TruncatedPacket(IngestError):
    def __init__(self, index: int, claimed: int, available: int):
        super().__init__(f"packet {index}: header claims {claimed} bytes, {available} remain")
        self.index = index
        self.claimed = claimed
        self.available = available


class ByteOrder(Enum):
    BIG = ">"
    LITTLE = "<"


@dataclass(frozen=True)
class CaptureHeader:
    byte_order: ByteOrder
    version: tuple[int, int]
    snap_length: int
    link_type: int
    thiszone: int = 0
    sigfigs: int = 0


@dataclass(frozen=True)
class PacketRecord:
    index: int
    ts_sec: int
    ts_usec: int
    captured_len: int
    original_len: int
    data: bytes

    @property
    def ts(self) -> float:
        return self.ts_sec + self.ts_usec / 1_000_000


@dataclass
class IngestStats:
    packets_read: int = 0
    bytes_read: int = 0
    errors: int = 0

    def as_dict(self) -> dict[str, int]:
        return {"packets_read": self.packets_read, "bytes_read": self.bytes_read, "errors": self.errors}


def _read_exact(source: BinaryIO, n: int) -> bytes:
    chunks = []
    remaining = n
    while remaining:
        chunk = source.read(remaining)
        if not chunk:
            break
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


class CaptureReader:
    """Sequential reader over the packet records following a global header."""

    def __init__(self, source: BinaryIO, header: CaptureHeader):
        self.header = header
        self._source = source
        self._rec = struct.Struct(header.byte_order.value + "IIII")
        self._index = 0
        self._done = False
        self.stats = IngestStats()
        self.last_error: IngestError | None = None

    def next_packet(self) -> PacketRecord | None:
        """Return the next record, or None at end of capture.

        Raises TruncatedPacket once if the final record is cut short; the
        reader is exhausted afterwards.
        """
        if self._done:
            return None
        head = _read_exact(self._source, RECORD_HEADER_LEN)
        if not head:
            self._done = True
            return None
        if len(head) < RECORD_HEADER_LEN:
            return self._truncate(RECORD_HEADER_LEN, len(head))
        ts_sec, ts_usec, incl, orig = self._rec.unpack(head)
        data = _read_exact(self._source, incl)
        if len(data) < incl:
            return self._truncate(incl, len(data))
        if incl > orig:
            # snaplen can only shorten a packet; tolerate writers that swap the fields
            logger.debug("packet %d: incl_len %d > orig_len %d", self._index, incl, orig)
            orig = incl
        rec = PacketRecord(self._index, ts_sec, ts_usec, incl, orig, data)
        self._index += 1
        self.stats.packets_read += 1
        self.stats.bytes_read += incl
        return rec

    def _truncate(self, claimed: int, available: int) -> None:
        self._done = True
        self.stats.errors += 1
        err = TruncatedPacket(self._index, claimed, available)
        self.last_error = err
        raise err

    def ingest_stats(self) -> dict[str, int]:
        return self.stats.as_dict()

    def __iter__(self) -> Iterator[PacketRecord]:
        """Iterate records; a truncated tail is logged and ends iteration."""
        while True:
            try:
                rec = self.next_packet()
            except TruncatedPacket as exc:
                logger.warning("capture truncated: %s", exc)
                return
            if rec is None:
                return
            yield rec


def open_capture(source: BinaryIO | bytes) -> CaptureReader:
    if isinstance(source, (bytes, bytearray, memoryview)):
        source = io.BytesIO(bytes(source))
    raw = _read_exact(source, GLOBAL_HEADER_LEN)
    if len(raw) < GLOBAL_HEADER_LEN:
        raise TruncatedHeader(f"global header needs {GLOBAL_HEADER_LEN} bytes, got {len(raw)}")
    magic_be = struct.unpack(">I", raw[:4])[0]
    if magic_be == PCAP_MAGIC:
        order = ByteOrder.BIG
    elif struct.unpack("<I", raw[:4])[0] == PCAP_MAGIC:
        order = ByteOrder.LITTLE
    else:
        raise UnknownMagic(f"magic 0x{magic_be:08X} is not classic microsecond pcap")
    vmaj, vmin, thiszone, sigfigs, snaplen, linktype = struct.unpack(order.value + "HHiIII", raw[4:])
    if linktype != LINKTYPE_ETHERNET:
        raise UnsupportedLinkType(f"link type {linktype} (only Ethernet is supported)")
    if snaplen <= 0:
        raise TruncatedHeader("snap length must be positive")
    header = CaptureHeader(order, (vmaj, vmin), snaplen, linktype, thiszone, sigfigs)
    return CaptureReader(source, header)


def read_capture(path) -> list[PacketRecord]:
    with open(path, "rb") as fh:
        return list(open_capture(fh))


def write_capture(
    packets: Iterable[PacketRecord | tuple[int, int, bytes]],
    sink: BinaryIO,
    byte_order: ByteOrder = ByteOrder.LITTLE,
    snap_length: int = 65535,
) -> int:
    """Write records to ``sink``; returns the number written.

    Items may be PacketRecords or ``(ts_sec, ts_usec, data)`` triples, in which
    case the original length equals the data length.
    """
    bo = byte_order.value
    sink.write(struct.pack(bo + "IHHiIII", PCAP_MAGIC, 2, 4, 0, 0, snap_length, LINKTYPE_ETHERNET))
    rec = struct.Struct(bo + "IIII")
    n = 0
    for item in packets:
        if isinstance(item, PacketRecord):
            ts_sec, ts_usec, data, orig = item.ts_sec, item.ts_usec, item.data, item.original_len
        else:
            ts_sec, ts_usec, data = item
            orig = len(data)
        incl = min(len(data), snap_length)
        sink.write(rec.pack(ts_sec, ts_usec, incl, max(orig, incl)))
        sink.write(data[:incl])
        n += 1
    return n


def capture_bytes(packets: Iterable, byte_order: ByteOrder = ByteOrder.LITTLE, snap_length: int = 65535) -> bytes:
    buf = io.BytesIO()
    write_capture(packets, buf, byte_order, snap_length)
    return buf.getvalue()
