from __future__ import annotations

import io
import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netsight.ingest import (
    ByteOrder,
    TruncatedHeader,
    TruncatedPacket,
    UnknownMagic,
    UnsupportedLinkType,
    capture_bytes,
    open_capture,
    read_capture,
    write_capture,
)
from netsight.trafficgen import generate, random_scenario


def test_big_endian_magic():
    raw = capture_bytes([(1, 2, b"abc")], ByteOrder.BIG)
    assert raw[:4] == bytes.fromhex("a1b2c3d4")
    reader = open_capture(raw)
    assert reader.header.byte_order is ByteOrder.BIG
    assert reader.header.link_type == 1


def test_little_endian_magic():
    raw = capture_bytes([], ByteOrder.LITTLE)
    assert raw[:4] == bytes.fromhex("d4c3b2a1")
    assert open_capture(raw).header.byte_order is ByteOrder.LITTLE


def test_short_input_is_truncated_header():
    with pytest.raises(TruncatedHeader):
        open_capture(b"\xa1\xb2\xc3\xd4" + b"\x00" * 6)


def test_nanosecond_magic_rejected():
    raw = bytearray(capture_bytes([], ByteOrder.BIG))
    raw[:4] = bytes.fromhex("a1b23c4d")
    with pytest.raises(UnknownMagic):
        open_capture(bytes(raw))


def test_non_ethernet_rejected():
    raw = bytearray(capture_bytes([], ByteOrder.LITTLE))
    raw[20:24] = struct.pack("<I", 101)
    with pytest.raises(UnsupportedLinkType):
        open_capture(bytes(raw))


def test_empty_capture_and_initial_stats():
    reader = open_capture(capture_bytes([]))
    assert reader.ingest_stats() == {"packets_read": 0, "bytes_read": 0, "errors": 0}
    assert reader.next_packet() is None


def test_truncated_packet_reports_index_and_counts_error():
    raw = capture_bytes([(1, 0, b"x" * 10)])
    raw += struct.pack("<IIII", 2, 0, 5000, 5000) + b"y" * 100
    reader = open_capture(raw)
    assert reader.next_packet().index == 0
    with pytest.raises(TruncatedPacket) as exc:
        reader.next_packet()
    assert exc.value.index == 1
    assert reader.ingest_stats()["errors"] == 1
    assert reader.next_packet() is None


def test_iteration_stops_quietly_at_truncation():
    raw = capture_bytes([(1, 0, b"x" * 10)]) + struct.pack("<IIII", 2, 0, 50, 50) + b"y"
    reader = open_capture(raw)
    assert len(list(reader)) == 1
    assert reader.ingest_stats() == {"packets_read": 1, "bytes_read": 10, "errors": 1}


def test_generator_capture_reads_back_exactly():
    gen = generate(random_scenario(3), 3)
    records = list(open_capture(gen.pcap))
    assert len(records) == len(gen.packets)
    assert [(r.ts_sec, r.ts_usec, r.data) for r in records] == gen.packets
    assert [r.index for r in records] == list(range(len(records)))
    ts = [r.ts for r in records]
    assert ts == sorted(ts)


def test_hundred_packet_stats(tmp_path):
    packets = [(100 + i, i, bytes([i % 256]) * (i + 1)) for i in range(100)]
    path = tmp_path / "c.pcap"
    with open(path, "wb") as fh:
        assert write_capture(packets, fh) == 100
    with open(path, "rb") as fh:
        reader = open_capture(fh)
        recs = list(reader)
        assert reader.ingest_stats()["packets_read"] == 100
        assert reader.ingest_stats()["bytes_read"] == sum(r.captured_len for r in recs)
    assert len(read_capture(path)) == 100


def test_snap_length_keeps_original_length():
    reader = open_capture(capture_bytes([(1, 0, b"z" * 300)], snap_length=100))
    rec = reader.next_packet()
    assert (rec.captured_len, rec.original_len, len(rec.data)) == (100, 300, 100)


packet_lists = st.lists(
    st.tuples(st.integers(0, 2**32 - 1), st.integers(0, 999_999), st.binary(max_size=200)), max_size=30)


@settings(max_examples=60, deadline=None)
@given(packet_lists)
def test_round_trip_both_byte_orders(packets):
    little = list(open_capture(capture_bytes(packets, ByteOrder.LITTLE)))
    big = list(open_capture(capture_bytes(packets, ByteOrder.BIG)))
    assert little == big
    assert [(r.ts_sec, r.ts_usec, r.data) for r in little] == packets
    for r in little:
        assert r.captured_len <= r.original_len and len(r.data) == r.captured_len


@settings(max_examples=30, deadline=None)
@given(packet_lists)
def test_stats_monotone(packets):
    reader = open_capture(io.BytesIO(capture_bytes(packets)))
    last = reader.ingest_stats()
    while reader.next_packet() is not None:
        now = reader.ingest_stats()
        assert all(now[k] >= last[k] for k in now)
        last = now
