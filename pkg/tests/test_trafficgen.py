from __future__ import annotations

import copy
import json

import pytest

from netsight.ingest import open_capture
from netsight.trafficgen import (
    Block,
    DeviceSpec,
    InvalidScenario,
    Scenario,
    SelfCheckFailure,
    behavior_scenario,
    bundled_scenario,
    generate,
    iot_scenario,
    occupancy_scenario,
    office_small,
    parse_scenario,
    random_scenario,
    reassignment_scenario,
    validate,
    verify_sidecar,
)


def test_empty_scenario():
    gen = generate(Scenario("empty"), 0)
    assert len(gen.pcap) == 24 and gen.packets == []
    assert list(open_capture(gen.pcap)) == []
    assert gen.sidecar["devices"] == [] and gen.sidecar["violations"] == []
    verify_sidecar(gen.pcap, gen.sidecar)


def test_empty_pair_passes():
    assert verify_sidecar(b"", {}).ok


def test_deterministic():
    a, b = generate(office_small(), 3), generate(office_small(), 3)
    assert a.pcap == b.pcap and a.sidecar_json() == b.sidecar_json()
    assert generate(office_small(), 4).pcap != a.pcap


def test_office_small_counts(office):
    _, gen, _ = office
    s = gen.sidecar
    assert len(s["devices"]) == 12
    assert len(s["persons"]) == 4
    assert len(s["violations"]) == 2
    assert sum(d["labels"].get("is_iot") == "true" for d in s["devices"]) == 3
    assert s["schema_version"] == 1 and s["scenario"] == "office-small"


def test_office_small_occupancy_shape(office):
    _, gen, _ = office
    start = office_small().start
    for w in gen.sidecar["occupancy"]["windows"]:
        hour = (w["start"] - start) / 3600
        # people are present from one hour in until nine hours in
        if 1 <= hour < 9:
            assert w["count"] == 4
        else:
            assert w["count"] == 0


def test_bundled_equals_builder():
    assert bundled_scenario("office-small").to_dict() == office_small().to_dict()


def test_self_check_passes(office):
    _, gen, _ = office
    report = verify_sidecar(gen.pcap, gen.sidecar)
    assert report.ok and report.devices == 12 and report.packets == len(gen.packets)


def test_fake_device_fails_self_check(office):
    _, gen, _ = office
    bad = copy.deepcopy(gen.sidecar)
    bad["devices"].append({"device_key": "02:de:ad:be:ef:00", "labels": {"is_iot": "true"}})
    with pytest.raises(SelfCheckFailure) as exc:
        verify_sidecar(gen.pcap, bad)
    assert any("02:de:ad:be:ef:00" in p for p in exc.value.problems)


def test_wrong_label_evidence_fails(office):
    _, gen, _ = office
    bad = copy.deepcopy(gen.sidecar)
    bad["packets"] += 1
    bad["violations"].append({"rule_id": "x", "device_key": "nobody"})
    with pytest.raises(SelfCheckFailure) as exc:
        verify_sidecar(gen.pcap, bad)
    assert len(exc.value.problems) == 2


@pytest.mark.parametrize("builder", [random_scenario, reassignment_scenario, iot_scenario, occupancy_scenario,
                                     behavior_scenario])
def test_families_self_check(builder):
    sc = builder(1)
    gen = generate(sc, 1)
    verify_sidecar(gen.pcap, gen.sidecar)


@pytest.mark.parametrize("mutate, message", [
    (lambda r: r.update(schema_version=99), "schema_version"),
    (lambda r: r["devices"].append(dict(r["devices"][0])), "repeated"),
    (lambda r: r["devices"][1].update(persona="Toaster"), "persona"),
    (lambda r: r["timeline"][0].update(pattern="teleport"), "pattern"),
    (lambda r: r["timeline"][0].update(start=10, end=5), "empty"),
    (lambda r: r["timeline"][0].update(device="ghost"), "unknown device"),
    (lambda r: r.update(policies=[{"rule_id": "a", "kind": "Nope"}]), "policies"),
    (lambda r: r.pop("name"), "schema"),
])
def test_invalid_scenarios(mutate, message):
    raw = json.loads(office_small().dumps())
    mutate(raw)
    with pytest.raises(InvalidScenario, match=message):
        parse_scenario(raw)


def test_overlapping_address_holders_rejected():
    sc = Scenario("clash", devices=[
        DeviceSpec("gw", "Gateway", dhcp=False),
        DeviceSpec("a", "Workstation", ip="10.0.0.150"),
        DeviceSpec("b", "Workstation", ip="10.0.0.150"),
    ], timeline=[Block("a", 0, 100, "browse"), Block("b", 50, 150, "browse")])
    with pytest.raises(InvalidScenario, match="overlapping"):
        validate(sc)


def test_generated_flows_timestamps_sorted():
    gen = generate(random_scenario(2), 2)
    ts = [(s, u) for s, u, _ in gen.packets]
    assert ts == sorted(ts)
