from __future__ import annotations

import json
import struct

import pytest

from netsight.ingest import PacketRecord
from netsight.knowledge import load_knowledge
from netsight.pipeline import run_pipeline
from netsight.policy import parse_policies
from netsight.trafficgen import generate, office_small, registry_rows, write_knowledge


def record(data: bytes, ts: float = 1.0, index: int = 0) -> PacketRecord:
    sec = int(ts)
    usec = round((ts - sec) * 1_000_000)
    return PacketRecord(index, sec, usec, len(data), len(data), data)


def analyze(sc, tmp_path, seed: int = 0, config=None):
    """Generate ``sc``, write its knowledge tables and run the default chain over it."""
    gen = generate(sc, seed)
    kdir = write_knowledge(tmp_path / f"k-{sc.name}-{seed}", registry_rows(sc), sc.policies)
    result = run_pipeline(gen.pcap, config, load_knowledge(kdir), parse_policies(json.dumps(sc.policies)))
    return gen, result


@pytest.fixture(scope="session")
def office(tmp_path_factory):
    sc = office_small()
    gen, result = analyze(sc, tmp_path_factory.mktemp("office"))
    return sc, gen, result


def pcap_header(magic_bytes: bytes = b"\xd4\xc3\xb2\xa1", linktype: int = 1, snaplen: int = 65535) -> bytes:
    return magic_bytes + struct.pack("<HHiIII", 2, 4, 0, 0, snaplen, linktype)
