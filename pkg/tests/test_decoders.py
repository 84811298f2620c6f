from __future__ import annotations

import random
import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import record
from netsight.decoders import (
    DhcpMessageType,
    EthernetFrame,
    Ipv4Datagram,
    PacketDecoder,
    Skip,
    TlsStage,
    Transport,
    TransportSegment,
    assemble_flows,
    certificate_common_names,
    decode_dhcp,
    decode_dns,
    decode_ethernet,
    decode_http,
    decode_ipv4,
    decode_layers,
    decode_packet,
    decode_tls,
    decode_transport,
    flow_key,
)
from netsight.ingest import open_capture
from netsight.trafficgen import der, generate, random_scenario, wire

A, B = "02:00:00:00:00:01", "02:00:00:00:00:02"


def seg(payload: bytes, sport=1000, dport=53, kind=Transport.UDP, ts=1.0, src="10.0.0.2", dst="10.0.0.1"):
    return TransportSegment(sport, dport, kind, payload, tcp_flags=0x18 if kind is Transport.TCP else None,
                            tcp_seq=1 if kind is Transport.TCP else None, ts=ts, src_ip=src, dst_ip=dst,
                            src_mac=A, dst_mac=B)


# link, network, transport

def test_minimal_ethernet_frame():
    f = decode_ethernet(record(bytes.fromhex(B.replace(":", "") + A.replace(":", "")) + b"\x08\x00"))
    assert isinstance(f, EthernetFrame)
    assert f.payload == b"" and f.src_mac == A and f.dst_mac == B


def test_short_frame_skipped():
    assert decode_ethernet(record(b"\x00" * 13)) == Skip("TooShort")


def test_non_ipv4_ethertype_skipped():
    assert decode_ethernet(record(b"\x00" * 12 + b"\x86\xdd" + b"\x00" * 40)).reason == "NotIPv4Ethertype"


def test_ipv4_addresses_verbatim():
    frame = decode_ethernet(record(wire.frame_udp(A, B, "10.0.0.2", "10.0.0.1", 1, 2, b"")))
    d = decode_ipv4(frame)
    assert (d.src_ip, d.dst_ip, d.protocol, d.header_len) == ("10.0.0.2", "10.0.0.1", 17, 20)


def test_ipv4_options_shift_payload():
    body = wire.udp("10.0.0.2", "10.0.0.1", 1, 2, b"abc")
    hdr = bytearray(wire.ipv4("10.0.0.2", "10.0.0.1", 17, body)[:20])
    hdr[0] = 0x46
    hdr[2:4] = struct.pack(">H", 24 + len(body))
    packet = bytes(hdr) + b"\x01\x01\x01\x01" + body
    d = decode_ipv4(EthernetFrame(A, B, 0x0800, packet, 0.0))
    assert d.header_len == 24 and d.payload == body


def test_ipv4_version_six_skipped():
    assert decode_ipv4(EthernetFrame(A, B, 0x0800, b"\x60" + b"\x00" * 39, 0.0)) == Skip("NotIPv4")


def test_ipv4_truncated_flagged():
    raw = wire.ipv4("10.0.0.2", "10.0.0.1", 17, wire.udp("10.0.0.2", "10.0.0.1", 1, 2, b"x" * 50))
    d = decode_ipv4(EthernetFrame(A, B, 0x0800, raw[:40], 0.0))
    assert d.truncated and len(d.payload) == 20


def test_udp_port_53():
    s = decode_layers(record(wire.frame_udp(A, B, "10.0.0.2", "10.0.0.1", 5000, 53, b"hi")))
    assert s.kind is Transport.UDP and s.dst_port == 53 and s.payload == b"hi" and s.tcp_flags is None


def test_tcp_data_offset_eight():
    raw = bytearray(wire.tcp("10.0.0.2", "10.0.0.1", 1, 80, 0, 0, 0x18, b""))
    raw[12] = 0x80
    body = bytes(raw) + b"\x01" * 12 + b"DATA"
    s = decode_transport(Ipv4Datagram("10.0.0.2", "10.0.0.1", 6, 20, 20 + len(body), body))
    assert s.payload == b"DATA" and s.tcp_flags == 0x18


def test_icmp_skipped_with_protocol_number():
    assert decode_transport(Ipv4Datagram("a", "b", 1, 20, 28, b"\x00" * 8)).reason == "UnsupportedProtocol:1"


def test_fast_and_layered_routes_agree_on_generated_traffic():
    gen = generate(random_scenario(11), 11)
    for rec in open_capture(gen.pcap):
        assert decode_packet(rec) == decode_layers(rec)


@settings(max_examples=150, deadline=None)
@given(st.binary(max_size=90))
def test_fast_and_layered_routes_agree_on_noise(data):
    rec = record(data)
    fast, slow = decode_packet(rec), decode_layers(rec)
    if isinstance(fast, Skip) or isinstance(slow, Skip):
        assert isinstance(fast, Skip) and isinstance(slow, Skip) and fast.reason == slow.reason
    else:
        assert fast == slow


# flows

def test_single_packet_flow():
    (f,) = assemble_flows([seg(b"x")])
    assert (f.pkts_orig, f.pkts_resp, f.bytes_orig) == (1, 0, 1)
    assert f.originator == ("10.0.0.2", 1000)


def test_interleaved_flow_counts():
    fwd = lambda t: seg(b"ab", ts=t)
    rev = lambda t: seg(b"c", sport=53, dport=1000, ts=t, src="10.0.0.1", dst="10.0.0.2")
    (f,) = assemble_flows([fwd(1), rev(2), fwd(3), rev(4), fwd(5)])
    assert (f.pkts_orig, f.pkts_resp, f.bytes_orig, f.bytes_resp) == (3, 2, 6, 2)
    assert f.first_ts == 1 and f.last_ts == 5


def test_idle_gap_splits_flow():
    flows = list(assemble_flows([seg(b"x", ts=0), seg(b"x", ts=400)]))
    assert len(flows) == 2 and flows[0].key == flows[1].key


def test_flow_key_symmetric():
    k1, first1 = flow_key("10.0.0.9", 1, "10.0.0.10", 2, Transport.TCP)
    k2, first2 = flow_key("10.0.0.10", 2, "10.0.0.9", 1, Transport.TCP)
    assert k1 == k2 and first1 != first2
    assert k1.ip_a == "10.0.0.9"  # numeric, not string, order


endpoints = st.sampled_from([("10.0.0.1", 53), ("10.0.0.2", 4000), ("10.0.0.3", 4001), ("10.0.0.10", 80)])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(endpoints, endpoints, st.integers(0, 900), st.integers(0, 100)), max_size=40))
def test_flow_symmetry_under_swap(pkts):
    pkts = sorted((p for p in pkts if p[0] != p[1]), key=lambda p: p[2])
    fwd = [seg(b"x" * n, sport=a[1], dport=b[1], ts=t, src=a[0], dst=b[0]) for a, b, t, n in pkts]
    rev = [seg(b"x" * n, sport=b[1], dport=a[1], ts=t, src=b[0], dst=a[0]) for a, b, t, n in pkts]
    f1, f2 = list(assemble_flows(fwd)), list(assemble_flows(rev))
    assert [f.key for f in f1] == [f.key for f in f2]
    for x, y in zip(f1, f2):
        assert x.orig_is_first != y.orig_is_first
        assert (x.pkts_orig, x.pkts_resp) == (y.pkts_orig, y.pkts_resp)
    assert sum(f.pkts_orig + f.pkts_resp for f in f1) == len(fwd)
    for f in f1:
        assert f.first_ts <= f.last_ts and f.pkts_orig >= 1


# DNS

def test_dns_response_answers():
    ev = decode_dns(seg(wire.dns_response(7, "Example.COM", ["93.184.216.34"]), sport=53, dport=1000))
    assert ev.is_response and ev.query_name == "example.com"
    assert ev.answers == (("example.com", "93.184.216.34"),)


def test_dns_query_has_no_answers():
    ev = decode_dns(seg(wire.dns_query(7, "example.com")))
    assert not ev.is_response and ev.answers == () and ev.qtype == 1


def test_dns_self_pointer_is_malformed():
    msg = struct.pack("!HHHHHH", 1, 0, 1, 0, 0, 0) + b"\xc0\x0c" + b"\x00\x01\x00\x01"
    assert decode_dns(seg(msg)).reason == "Malformed"


def test_dns_label_overrun_is_malformed():
    msg = struct.pack("!HHHHHH", 1, 0, 1, 0, 0, 0) + b"\x09abc"
    assert decode_dns(seg(msg)).reason == "Malformed"


def _compress(names: list[str]) -> bytes:
    """Reference compressor: reuse the longest already-written suffix."""
    msg = bytearray(struct.pack("!HHHHHH", 1, 0x8180, 1, len(names) - 1, 0, 0))
    offsets: dict[tuple, int] = {}
    for i, name in enumerate(names):
        labels = name.split(".")
        for j in range(len(labels)):
            suffix = tuple(labels[j:])
            if suffix in offsets:
                msg += struct.pack("!H", 0xC000 | offsets[suffix])
                break
            if len(msg) < 0x3FFF:
                offsets[suffix] = len(msg)
            msg += bytes([len(labels[j])]) + labels[j].encode()
        else:
            msg += b"\x00"
        if i == 0:
            msg += struct.pack("!HH", 1, 1)
        else:
            msg += struct.pack("!HHIH", 1, 1, 60, 4) + bytes([10, 0, 0, i])
    return bytes(msg)


label = st.text("abcdefghij0123456789-", min_size=1, max_size=8)
fqdn = st.lists(label, min_size=1, max_size=4).map(".".join)


@settings(max_examples=150, deadline=None)
@given(st.lists(fqdn, min_size=2, max_size=6))
def test_dns_decompression_matches_reference(names):
    ev = decode_dns(seg(_compress(names), sport=53, dport=9))
    assert ev.query_name == names[0]
    assert [n for n, _ in ev.answers] == names[1:]


# DHCP

def test_dhcp_ack():
    msg = wire.dhcp_message(2, 9, A, wire.DHCP_ACK, yiaddr="10.0.0.7", options=[(12, b"alice-laptop")])
    ev = decode_dhcp(seg(msg, sport=67, dport=68))
    assert ev.msg_type is DhcpMessageType.ACK and ev.assigned_ip == "10.0.0.7"
    assert ev.hostname == "alice-laptop" and ev.client_mac == A


def test_dhcp_discover_options():
    msg = wire.dhcp_message(1, 9, A, wire.DHCP_DISCOVER, options=[(60, b"android-dhcp-13"), (55, bytes([1, 3, 6]))])
    ev = decode_dhcp(seg(msg, sport=68, dport=67))
    assert ev.assigned_ip is None and ev.vendor_class == "android-dhcp-13" and ev.param_req_list == (1, 3, 6)


def test_dhcp_without_cookie():
    assert decode_dhcp(seg(b"\x00" * 300, dport=67)).reason == "NoCookie"


def test_dhcp_option_overrun():
    msg = wire.dhcp_message(1, 9, A, wire.DHCP_DISCOVER)[:-1] + bytes([12, 40, 65])
    assert decode_dhcp(seg(msg, dport=67)).reason == "Malformed"


# HTTP

def test_http_request_fields():
    raw = b"GET /status HTTP/1.1\r\nHost: printer.local\r\nUser-Agent: LaserJet/2.1\r\n\r\n"
    ev = decode_http(seg(raw, dport=80, kind=Transport.TCP))
    assert (ev.method, ev.uri, ev.host, ev.user_agent) == ("GET", "/status", "printer.local", "LaserJet/2.1")


def test_http_headers_case_insensitive():
    ev = decode_http(seg(b"POST /x HTTP/1.0\r\nhOsT:  a.b  \r\n\r\n", dport=80, kind=Transport.TCP))
    assert ev.host == "a.b" and ev.user_agent is None


def test_tls_on_port_80_not_a_request():
    hello = wire.tls_client_hello((0x1301,), None, b"\x00" * 32)
    assert decode_http(seg(hello, dport=80, kind=Transport.TCP)).reason == "NotRequest"


# TLS

def test_client_hello():
    hello = wire.tls_client_hello((0x1301, 0x1302), "api.vendor.com", b"\x01" * 32)
    ev = decode_tls(seg(hello, dport=443, kind=Transport.TCP))
    assert ev.stage is TlsStage.CLIENT_HELLO
    assert ev.sni == "api.vendor.com" and ev.cipher_suites == (0x1301, 0x1302)


def test_client_hello_without_sni():
    ev = decode_tls(seg(wire.tls_client_hello((0xC02F,), None, b"\x01" * 32), dport=443, kind=Transport.TCP))
    assert ev.sni is None and ev.cipher_suites == (0xC02F,)


def test_certificate_issuer():
    flight = wire.tls_server_flight(0x1301, b"\x02" * 32, der.certificate("Acme IoT CA", "api.acme.com"))
    ev = decode_tls(seg(flight, sport=443, dport=4000, kind=Transport.TCP))
    assert ev.stage is TlsStage.CERTIFICATE
    assert (ev.issuer_cn, ev.subject_cn) == ("Acme IoT CA", "api.acme.com")


def test_app_data_not_handshake():
    assert decode_tls(seg(wire.tls_app_data(40), dport=443, kind=Transport.TCP)).reason == "NotHandshake"


def test_bad_suite_length_malformed():
    hello = bytearray(wire.tls_client_hello((0x1301,), None, b"\x00" * 32))
    hello[5 + 4 + 35:5 + 4 + 37] = b"\x00\x03"
    assert decode_tls(seg(bytes(hello), dport=443, kind=Transport.TCP)).reason == "Malformed"


def test_certificate_names_match_cryptography():
    x509 = pytest.importorskip("cryptography.x509")
    from cryptography.x509.oid import NameOID

    for issuer, subject in [("Acme IoT CA", "cam.acme.com"), ("R3", "example.org")]:
        cert = x509.load_der_x509_certificate(der.certificate(issuer, subject))
        expect = (cert.issuer.get_attributes_for_oid(NameOID.COMMON_NAME)[0].value,
                  cert.subject.get_attributes_for_oid(NameOID.COMMON_NAME)[0].value)
        assert certificate_common_names(der.certificate(issuer, subject)) == expect


def test_certificate_without_cn():
    assert certificate_common_names(der.seq(der.seq())) == (None, None)


# dispatch

def test_decoder_totality_on_generated_capture():
    gen = generate(random_scenario(5), 5)
    dec = PacketDecoder()
    for rec in open_capture(gen.pcap):
        dec.feed(rec)
    dec.finish()
    st_ = dec.stats
    assert st_.packets_in == st_.decoded + st_.skipped_total == len(gen.packets)
    assert st_.malformed == 0 and st_.flows > 0


def test_reordered_tcp_segment_counted():
    dec = PacketDecoder()
    req = b"GET / HTTP/1.1\r\nHost: h\r\n\r\n"
    mk = lambda s: record(wire.frame_tcp(A, B, "10.0.0.2", "10.0.0.1", 4000, 80, s, 0, 0x18, req))
    dec.feed(mk(1000))
    dec.feed(mk(1000 + len(req)))
    out = dec.feed(mk(1000))
    assert out.events == [] and dec.stats.app_skips["http:Reordered"] == 1


def test_decoders_pure():
    rnd = random.Random(3)
    for _ in range(50):
        data = bytes(rnd.randrange(256) for _ in range(rnd.randint(0, 300)))
        for fn in (decode_dns, decode_dhcp, decode_http, decode_tls):
            assert fn(seg(data)) == fn(seg(data))
