from __future__ import annotations

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netsight.decoders import DnsEvent, FlowKey, FlowRecord, HttpEvent, Transport
from netsight.knowledge import (
    DeviceRegistry,
    GeoTable,
    KnowledgeBundle,
    RegistryEntry,
)
from netsight.pipeline.compose import AttributeClaim, Resolution
from netsight.pipeline.identity import DeviceIdentity, bind_identity
from netsight.pipeline.profiles import DeviceProfile
from netsight.pipeline.run import EventLog
from netsight.policy import (
    DuplicateRuleId,
    ParseError,
    PolicyKind,
    Violation,
    evaluate_policies,
    parse_policies,
    report_violations,
)
import ipaddress

MAC1, MAC2, MAC3 = "02:00:00:00:00:01", "02:00:00:00:00:02", "02:00:00:00:00:03"
IP = {MAC1: "10.0.0.11", MAC2: "10.0.0.12", MAC3: "10.0.0.13"}

ALL_KINDS = [
    {"rule_id": "reg", "kind": "RequireRegistered"},
    {"rule_id": "enc", "kind": "RequireEncrypted"},
    {"rule_id": "cls", "kind": "ForbidDeviceClass", "params": {"class": "camera"}},
    {"rule_id": "geo", "kind": "ForbidDestGeo", "params": {"countries": ["kp"]}},
    {"rule_id": "dom", "kind": "ForbidDomainSuffix", "params": {"suffixes": [".bet"]}},
]


def test_parse_empty():
    assert parse_policies("[]") == []


def test_parse_each_kind():
    rules = parse_policies(json.dumps(ALL_KINDS))
    assert [r.kind for r in rules] == list(PolicyKind)
    assert rules[1].params == {"ports": [80, 8080]}
    assert rules[3].params == {"countries": ["KP"]}
    assert rules[4].params == {"suffixes": ["bet"]}


def test_duplicate_ids():
    with pytest.raises(DuplicateRuleId):
        parse_policies(json.dumps([ALL_KINDS[0], ALL_KINDS[0]]))


def test_parse_errors_carry_location():
    text = '[\n {"rule_id": "a", "kind": "RequireRegistered"},\n {"rule_id": "b", "kind": "ForbidDestGeo"}\n]'
    with pytest.raises(ParseError) as exc:
        parse_policies(text)
    assert exc.value.line == 3 and exc.value.field == "[1].params.countries"
    with pytest.raises(ParseError) as exc:
        parse_policies("[{,]")
    assert exc.value.line == 1
    with pytest.raises(ParseError):
        parse_policies('[{"rule_id": "x", "kind": "Nope"}]')
    with pytest.raises(ParseError):
        parse_policies('{"rule_id": "x"}')


# evaluation fixtures

def profile(mac, device_type=None):
    ident = DeviceIdentity(mac, mac)
    attrs = {}
    claims = []
    if device_type:
        attrs["device_type"] = Resolution(device_type, 1.0, ("e",))
        claims.append(AttributeClaim(mac, "device_type", device_type, 0.8, "e", 50.0))
    return DeviceProfile(mac, ident, attrs, claims, first_seen=1.0, last_seen=100.0)


def http(mac, ts, port=80):
    return HttpEvent(ts=ts, src_ip=IP[mac], dst_ip="93.184.216.34", src_mac=mac, dst_port=port, method="GET",
                     uri="/", host="example.com")


def dnsq(mac, name, ts):
    return DnsEvent(ts=ts, src_ip=IP[mac], dst_ip="10.0.0.1", src_mac=mac, query_name=name, qtype=1,
                    is_response=False)


def flow(mac, dst, ts):
    return FlowRecord(FlowKey(IP[mac], 4000, dst, 443, Transport.TCP), (IP[mac], 4000), ts, ts, 1, 1, 10, 10, mac)


def world(http_events=(), dns=(), flows=()):
    resolver = bind_identity([], [(IP[m], m, 0.0) for m in IP])
    ev = EventLog(flows=list(flows), dns=list(dns), http=list(http_events), resolver=resolver)
    kb = KnowledgeBundle(
        registry=DeviceRegistry({MAC1: RegistryEntry(MAC1, "alice", "d1", "workstation", True),
                                 MAC2: RegistryEntry(MAC2, "bob", "d2", "camera", False)}),
        geo=GeoTable(((ipaddress.IPv4Network("175.45.176.0/22"), "KP"), (ipaddress.IPv4Network("0.0.0.0/0"), "US"))),
    )
    profiles = {MAC1: profile(MAC1), MAC2: profile(MAC2, "camera"), MAC3: profile(MAC3)}
    return profiles, ev, kb


def rules(*ids):
    return [r for r in parse_policies(json.dumps(ALL_KINDS)) if r.rule_id in ids]


def test_unregistered_and_unauthorized():
    profiles, ev, kb = world()
    out = evaluate_policies(rules("reg"), profiles, ev, kb)
    assert [(v.device_key, v.count) for v in out] == [(MAC2, 1), (MAC3, 1)]
    assert "not authorized" in out[0].evidence and "not in device registry" in out[1].evidence


def test_cleartext_counted_once_per_device():
    profiles, ev, kb = world(http_events=[http(MAC1, t) for t in range(10, 17)] + [http(MAC3, 5, port=8443)])
    (v,) = evaluate_policies(rules("enc"), profiles, ev, kb)
    assert (v.device_key, v.count, v.ts) == (MAC1, 7, 10)


def test_forbidden_class():
    profiles, ev, kb = world()
    (v,) = evaluate_policies(rules("cls"), profiles, ev, kb)
    assert v.device_key == MAC2 and v.ts == 50.0


def test_forbidden_geo_per_flow():
    profiles, ev, kb = world(flows=[flow(MAC1, "175.45.176.9", 20), flow(MAC1, "175.45.177.1", 10),
                                    flow(MAC3, "8.8.8.8", 5)])
    (v,) = evaluate_policies(rules("geo"), profiles, ev, kb)
    assert (v.device_key, v.count, v.ts) == (MAC1, 2, 10)


def test_forbidden_suffix():
    profiles, ev, kb = world(dns=[dnsq(MAC3, "odds.bet", 9), dnsq(MAC3, "bet", 3), dnsq(MAC3, "alphabet.com", 4),
                                  dnsq(MAC1, "notbet", 1)])
    (v,) = evaluate_policies(rules("dom"), profiles, ev, kb)
    assert (v.device_key, v.count, v.ts) == (MAC3, 2, 3)


def test_report_ordering_and_formats():
    vs = [Violation("b", "y", 1.0, "e"), Violation("a", "y", 1.0, "e"), Violation("b", "x", 1.0, "e"),
          Violation("a", "x", 2.0, "e", 3)]
    lines = report_violations(vs).splitlines()
    assert [(json.loads(x)["rule_id"], json.loads(x)["device_key"]) for x in lines] == [
        ("a", "x"), ("a", "y"), ("b", "x"), ("b", "y")]
    assert report_violations(list(reversed(vs))) == report_violations(vs)
    assert report_violations([]) == ""
    assert report_violations(vs, "text").startswith("a\tx\tcount=3")


def test_office_small_violations_match_labels(office):
    _, gen, res = office
    got = {(v.rule_id, v.device_key, v.count) for v in res.violations}
    assert got == {(v["rule_id"], v["device_key"], v["count"]) for v in gen.sidecar["violations"]}


# properties

event_lists = st.lists(st.tuples(st.sampled_from([MAC1, MAC2, MAC3]), st.sampled_from(["http", "dns", "flow"]),
                                 st.integers(0, 1000), st.booleans()), max_size=30)


def _materialize(items):
    h, d, f = [], [], []
    for mac, kind, ts, bad in items:
        if kind == "http":
            h.append(http(mac, ts, 80 if bad else 443))
        elif kind == "dns":
            d.append(dnsq(mac, "x.bet" if bad else "x.com", ts))
        else:
            f.append(flow(mac, "175.45.176.1" if bad else "1.1.1.1", ts))
    return h, d, f


def _keyset(vs):
    return {(v.rule_id, v.device_key) for v in vs}


@settings(max_examples=100, deadline=None)
@given(event_lists, event_lists)
def test_monotone_in_events(base, extra):
    all_rules = parse_policies(json.dumps(ALL_KINDS))
    p, ev, kb = world(*_materialize(base))
    before = _keyset(evaluate_policies(all_rules, p, ev, kb))
    p, ev, kb = world(*_materialize(base + extra))
    assert before <= _keyset(evaluate_policies(all_rules, p, ev, kb))


@settings(max_examples=100, deadline=None)
@given(event_lists)
def test_kinds_independent(items):
    all_rules = parse_policies(json.dumps(ALL_KINDS))
    p, ev, kb = world(*_materialize(items))
    joint = evaluate_policies(all_rules, p, ev, kb)
    separate = [v for r in all_rules for v in evaluate_policies([r], p, ev, kb)]
    key = lambda v: (v.rule_id, v.device_key)
    assert [v.as_dict() for v in sorted(joint, key=key)] == [v.as_dict() for v in sorted(separate, key=key)]


def test_geo_matches_brute_force():
    rnd = random.Random(9)
    blocks = [ipaddress.IPv4Network("175.45.176.0/22"), ipaddress.IPv4Network("8.8.0.0/16")]
    for _ in range(20):
        flows = []
        for _ in range(rnd.randint(0, 30)):
            net = rnd.choice(blocks)
            dst = str(net.network_address + rnd.randrange(net.num_addresses))
            flows.append(flow(rnd.choice([MAC1, MAC2, MAC3]), dst, rnd.randrange(1000)))
        p, ev, kb = world(flows=flows)
        expect = {}
        for fl in flows:
            if ipaddress.IPv4Address(fl.key.ip_b if fl.orig_is_first else fl.key.ip_a) in blocks[0]:
                expect[fl.orig_mac] = expect.get(fl.orig_mac, 0) + 1
        got = {v.device_key: v.count for v in evaluate_policies(rules("geo"), p, ev, kb)}
        assert got == expect
