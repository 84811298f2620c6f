from __future__ import annotations

import ipaddress
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netsight.knowledge import (
    DomainOwner,
    DomainOwnershipTable,
    GeoTable,
    UnreadableFile,
    knowledge_digest,
    load_knowledge,
)


@pytest.fixture
def kdir(tmp_path):
    (tmp_path / "oui.csv").write_text("prefix,vendor\n02:00:00,TestVendor\nnot-a-prefix,Bad\n3C:A1:05,Acme\n")
    (tmp_path / "ua_rules.json").write_text(json.dumps([
        {"pattern": "LaserJet", "attrs": {"device_type": "printer"}, "rule_id": "r-printer"},
        {"pattern": "([", "attrs": {"os": "broken"}, "rule_id": "r-bad"},
        {"pattern": "Mozilla.*Windows", "attrs": {"os": "Windows"}, "rule_id": "r-win"},
        {"pattern": "Mozilla", "attrs": {"browser": "generic"}, "rule_id": "r-moz"},
    ]))
    (tmp_path / "domain_owners.csv").write_text("suffix,org,country\nvendor.com,AcmeCorp,US\ncom,Generic,\n")
    (tmp_path / "geo.csv").write_text("cidr,country\n93.184.0.0/16,US\n10.0.0.0/8,A\n10.1.0.0/16,B\nbogus,ZZ\n")
    (tmp_path / "registry.csv").write_text(
        "mac,owner,device_id,device_class,authorized\n"
        "02:00:00:00:00:07,alice,WS-1,workstation,true\n"
        "02:00:00:00:00:08,bob,PH-1,phone,false\n")
    return tmp_path


def test_empty_directory(tmp_path):
    kb = load_knowledge(tmp_path)
    assert len(kb.warnings) == 5
    assert kb.lookup_vendor("aa:bb:cc:00:00:01").vendor is None
    assert kb.match_user_agent("x") is None
    assert kb.lookup_domain_owner("a.com") is None
    assert kb.lookup_geo("1.2.3.4") is None
    assert kb.lookup_registration("aa:bb:cc:00:00:01") is None


def test_vendor_lookup(kdir):
    kb = load_knowledge(kdir)
    assert kb.lookup_vendor("02:00:00:00:00:07").vendor == "TestVendor"
    assert kb.lookup_vendor("3c-a1-05-11-22-33").vendor == "Acme"
    assert kb.lookup_vendor("02:00:00:00:00:07") == kb.lookup_vendor("02:00:00:00:00:07")
    assert kb.skipped["oui.csv"] == 1


def test_locally_administered_unregistered(kdir):
    m = load_knowledge(kdir).lookup_vendor("06:11:22:33:44:55")
    assert m.vendor is None and m.local_admin
    assert not load_knowledge(kdir).lookup_vendor("02:00:00:00:00:01").local_admin


def test_vendor_lookup_total_on_garbage(kdir):
    assert load_knowledge(kdir).lookup_vendor("zz").vendor is None


def test_user_agent_rules(kdir):
    kb = load_knowledge(kdir)
    hit = kb.match_user_agent("LaserJet/2.1")
    assert hit.attrs == {"device_type": "printer"} and hit.rule_id == "r-printer"
    assert kb.match_user_agent("Mozilla/5.0 (Windows NT 10.0)").rule_id == "r-win"
    assert kb.match_user_agent("") is None
    assert kb.skipped["ua_rules.json"] == 1


def test_domain_owner(kdir):
    kb = load_knowledge(kdir)
    assert kb.lookup_domain_owner("api.vendor.com").org == "AcmeCorp"
    assert kb.lookup_domain_owner("API.Vendor.COM.").org == "AcmeCorp"
    assert kb.lookup_domain_owner("a.dor.com").org == "Generic"
    assert kb.lookup_domain_owner("vendor.org") is None


def test_geo(kdir):
    kb = load_knowledge(kdir)
    assert kb.lookup_geo("93.184.216.34") == "US"
    assert kb.lookup_geo("10.1.2.3") == "B"
    assert kb.lookup_geo("10.2.2.3") == "A"
    assert kb.lookup_geo("not-an-ip") is None
    assert kb.skipped["geo.csv"] == 1


def test_registry(kdir):
    kb = load_knowledge(kdir)
    e = kb.lookup_registration("02:00:00:00:00:07")
    assert (e.owner, e.device_id, e.device_class, e.authorized) == ("alice", "WS-1", "workstation", True)
    assert kb.lookup_registration("02:00:00:00:00:08").authorized is False
    assert kb.lookup_registration("02:00:00:00:00:09") is None
    assert kb.registry.persons == {"alice", "bob"}


def test_digest_changes_with_content(kdir):
    d1 = knowledge_digest(kdir)
    assert d1 == knowledge_digest(kdir)
    (kdir / "geo.csv").write_text("cidr,country\n")
    assert knowledge_digest(kdir) != d1


def test_undecodable_file_is_unreadable(tmp_path):
    (tmp_path / "oui.csv").write_bytes(b"\xff\xfe\x00bad")
    with pytest.raises(UnreadableFile):
        load_knowledge(tmp_path)


labels = st.sampled_from(["a", "b", "com", "vendor", "api", "x"])
names = st.lists(labels, min_size=1, max_size=4).map(".".join)


@settings(max_examples=150, deadline=None)
@given(st.dictionaries(names, st.integers(0, 9), max_size=8), names)
def test_longest_suffix_matches_brute_force(entries, query):
    table = DomainOwnershipTable({k: DomainOwner(str(v), None) for k, v in entries.items()})
    candidates = [k for k in entries if query == k or query.endswith("." + k)]
    expect = str(entries[max(candidates, key=len)]) if candidates else None
    got = table.lookup(query)
    assert (got.org if got else None) == expect


nets = st.tuples(st.integers(0, 2**32 - 1), st.integers(0, 32)).map(
    lambda t: ipaddress.IPv4Network((t[0] >> (32 - t[1]) << (32 - t[1]) if t[1] else 0, t[1])))


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(nets, st.sampled_from("ABCDE")), max_size=10), st.integers(0, 2**32 - 1))
def test_longest_prefix_matches_brute_force(entries, ip):
    addr = ipaddress.IPv4Address(ip)
    best = None
    for net, country in entries:  # later duplicates win, as when loading
        if addr in net and (best is None or net.prefixlen >= best[0].prefixlen):
            best = (net, country)
    assert GeoTable(tuple(entries)).lookup(str(addr)) == (best[1] if best else None)


def test_map_tables_order_insensitive(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir(), b.mkdir()
    rows = ["x.com,X,US", "y.x.com,Y,DE", "z.org,Z,"]
    (a / "domain_owners.csv").write_text("\n".join(rows) + "\n")
    (b / "domain_owners.csv").write_text("\n".join(reversed(rows)) + "\n")
    assert load_knowledge(a).domains == load_knowledge(b).domains
