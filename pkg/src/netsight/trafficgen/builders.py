"""Ready-made scenarios: the bundled office plus seeded families used as test oracles."""

from __future__ import annotations

import random

from .scenario import Block, DeviceSpec, Scenario, assign_addresses, validate
from .world import FORBIDDEN_COUNTRY, FORBIDDEN_SUFFIX, VENDORS, WEB_ORGS

HOUR = 3600
PEOPLE = ("alice", "bob", "carol", "dave", "erin", "frank", "grace", "heidi", "ivan", "judy", "mallory", "niaj")


def _finish(sc: Scenario) -> Scenario:
    assign_addresses(sc)
    validate(sc)
    return sc


def office_small() -> Scenario:
    """Twelve devices over an 11-hour day; four people present 09:00-17:00."""
    devices = [DeviceSpec("gw", "Gateway", dhcp=False)]
    timeline = [Block("gw", 0, 11 * HOUR, "serve")]
    for person in ("alice", "bob", "carol", "dave"):
        devices.append(DeviceSpec(f"{person}-ws", "Workstation", owner=person))
        params = {"interval": 45}
        if person == "dave":
            params["forbidden_queries"] = 3
        timeline.append(Block(f"{person}-ws", HOUR, 9 * HOUR, "browse", params))
    for person in ("alice", "bob", "carol"):
        devices.append(DeviceSpec(f"{person}-phone", "PhoneDualUse", owner=person))
        timeline.append(Block(f"{person}-phone", HOUR + 300, 9 * HOUR - 300, "browse",
                              {"interval": 240, "http_every": 3}))
    for i in range(1, 4):
        devices.append(DeviceSpec(f"cam{i}", "IoTCamera"))
        timeline.append(Block(f"cam{i}", 60 * i, 11 * HOUR - 60 * i, "iot"))
    devices.append(DeviceSpec("printer", "Printer", dhcp=False, registered=False))
    timeline.append(Block("printer", 120, 11 * HOUR - 120, "printer"))
    policies = [
        {"rule_id": "P1-registered", "kind": "RequireRegistered", "params": {}},
        {"rule_id": "P1-no-betting", "kind": "ForbidDomainSuffix", "params": {"suffixes": [FORBIDDEN_SUFFIX]}},
    ]
    return _finish(Scenario("office-small", devices=devices, timeline=timeline, policies=policies))


def _persona_block(rng: random.Random, name: str, persona: str, start: float, end: float) -> Block:
    if persona == "Workstation":
        return Block(name, start, end, "browse", {"interval": rng.choice([30, 45, 60])})
    if persona == "PhoneDualUse":
        return Block(name, start, end, rng.choice(["browse", "presence"]), {"interval": 120})
    if persona == "IoTCamera":
        return Block(name, start, end, "iot", {"dns_interval": rng.choice([120, 300]), "tls_interval": 900})
    if persona == "Printer":
        return Block(name, start, end, "printer")
    return Block(name, start, end, "idle")


def random_scenario(seed: int, max_devices: int = 8, span: float = 1800) -> Scenario:
    """A small mixed network: one gateway, random personas, DHCP and static hosts."""
    rng = random.Random(f"random/{seed}")
    devices = [DeviceSpec("gw", "Gateway", dhcp=False)]
    timeline = [Block("gw", 0, span, "serve")]
    for i in range(rng.randint(2, max_devices)):
        persona = rng.choice(["Workstation", "PhoneDualUse", "IoTCamera", "Printer", "Server"])
        name = f"d{i}"
        owner = rng.choice(PEOPLE[:4]) if persona in ("Workstation", "PhoneDualUse") else ""
        devices.append(DeviceSpec(name, persona, owner=owner, dhcp=persona not in ("Printer", "Server") and
                                  rng.random() < 0.85, registered=rng.random() < 0.8))
        s = rng.uniform(0, span / 3)
        e = rng.uniform(s + span / 3, span)
        timeline.append(_persona_block(rng, name, persona, s, e))
    return _finish(Scenario(f"random-{seed}", devices=devices, timeline=timeline))


def reassignment_scenario(seed: int, holders: int = 3, slot: float = 1200) -> Scenario:
    """Several DHCP clients take turns holding the same address."""
    rng = random.Random(f"reassign/{seed}")
    ip = "10.0.0.150"
    devices = [DeviceSpec("gw", "Gateway", dhcp=False)]
    timeline = []
    personas = ["Workstation", "IoTCamera", "PhoneDualUse", "Printer"]
    t = 0.0
    for i in range(holders):
        persona = rng.choice(personas)
        name = f"h{i}"
        devices.append(DeviceSpec(name, persona, ip=ip, owner=rng.choice(PEOPLE) if persona != "IoTCamera" else ""))
        start = t + rng.uniform(5, 60)
        end = start + slot
        block = {"Workstation": Block(name, start, end, "browse", {"interval": 30}),
                 "IoTCamera": Block(name, start, end, "iot", {"dns_interval": 60, "tls_interval": 300}),
                 "PhoneDualUse": Block(name, start, end, "browse", {"interval": 40}),
                 "Printer": Block(name, start, end, "printer", {"dns_interval": 60, "http_interval": 200})}[persona]
        timeline.append(block)
        t = end + rng.uniform(5, 120)
    devices.append(DeviceSpec("other", "Workstation", owner="zoe"))
    timeline.append(Block("other", 0, t, "browse", {"interval": 90}))
    timeline.insert(0, Block("gw", 0, t + 10, "serve"))
    return _finish(Scenario(f"reassign-{seed}", devices=devices, timeline=timeline))


def iot_scenario(seed: int, n_devices: int = 10) -> Scenario:
    """Devices with planted DNS dominance: >= 0.9 for IoT, <= 0.3 otherwise."""
    rng = random.Random(f"iot/{seed}")
    vendor_orgs = sorted({v.org for v in VENDORS.values()})
    devices = [DeviceSpec("gw", "Gateway", dhcp=False)]
    timeline = [Block("gw", 0, 3600, "serve")]
    for i in range(n_devices):
        iot = rng.random() < 0.5
        primary = rng.choice(vendor_orgs)
        total = rng.randint(20, 80)
        if iot:
            share = rng.uniform(0.9, 1.0)
            others = rng.sample(WEB_ORGS, 2)
        else:
            share = rng.uniform(0.05, 0.3)
            others = rng.sample(WEB_ORGS, rng.randint(4, 8))
        name = f"x{i}"
        devices.append(DeviceSpec(name, "IoTCamera" if iot else "Workstation", dhcp=False))
        timeline.append(Block(name, rng.uniform(0, 300), rng.uniform(2400, 3500), "dns_mix",
                              {"total": total, "share": share, "primary_org": primary, "other_orgs": others,
                               "iot": iot}))
    return _finish(Scenario(f"iot-{seed}", devices=devices, timeline=timeline))


def policy_scenario(seed: int) -> Scenario:
    """Random mix of compliant and offending devices under a random policy pack."""
    rng = random.Random(f"policy/{seed}")
    span = 2400
    devices = [DeviceSpec("gw", "Gateway", dhcp=False)]
    timeline = [Block("gw", 0, span, "serve")]
    for i in range(rng.randint(4, 9)):
        persona = rng.choice(["Workstation", "PhoneDualUse", "IoTCamera", "Printer"])
        name = f"p{i}"
        roll = rng.random()
        devices.append(DeviceSpec(name, persona, owner=rng.choice(PEOPLE) if persona != "IoTCamera" else "",
                                  dhcp=persona != "Printer", registered=roll > 0.2, authorized=roll > 0.3))
        s, e = rng.uniform(0, 400), rng.uniform(1200, span)
        timeline.append(_persona_block(rng, name, persona, s, e))
        for _ in range(rng.randint(0, 2)):
            extra = rng.choice(["forbidden_dns", "geo", "http_cleartext", "http_alt"])
            a = rng.uniform(s, e - 200)
            params = {"count": rng.randint(1, 4)}
            if extra == "http_alt":
                extra, params["port"] = "http_cleartext", 8080
            timeline.append(Block(name, a, a + 150, extra, params))
    kinds = [
        {"kind": "RequireRegistered", "params": {}},
        {"kind": "RequireEncrypted", "params": {"ports": rng.choice([[80], [80, 8080], [8080]])}},
        {"kind": "ForbidDeviceClass", "params": {"class": rng.choice(["camera", "printer", "phone"])}},
        {"kind": "ForbidDestGeo", "params": {"countries": rng.sample([FORBIDDEN_COUNTRY, "MT", "GB", "CH"], 2)}},
        {"kind": "ForbidDomainSuffix", "params": {"suffixes": [FORBIDDEN_SUFFIX] + rng.sample(["fm", "tv", "io"], 1)}},
    ]
    chosen = rng.sample(kinds, rng.randint(2, len(kinds)))
    policies = [{"rule_id": f"R{j}-{k['kind']}", **k} for j, k in enumerate(chosen)]
    return _finish(Scenario(f"policy-{seed}", devices=devices, timeline=timeline, policies=policies))


def occupancy_scenario(seed: int, persons: int | None = None, window: int = 900) -> Scenario:
    """1-10 people, some with several devices, coming and going; leaves empty windows."""
    rng = random.Random(f"occupancy/{seed}")
    n = persons if persons is not None else rng.randint(1, 10)
    span = 6 * HOUR
    devices = [DeviceSpec("gw", "Gateway", dhcp=False)]
    timeline = [Block("gw", 0, span, "serve")]
    for p in PEOPLE[:n]:
        for j in range(rng.randint(1, 3)):
            name = f"{p}-{j}"
            devices.append(DeviceSpec(name, rng.choice(["Workstation", "PhoneDualUse"]), owner=p, dhcp=False))
            # everyone leaves the middle hour empty
            for s0, e0 in ((0, 2.5 * HOUR), (3.5 * HOUR, span)):
                s = rng.uniform(s0, e0 - 600)
                e = rng.uniform(s + 300, e0)
                timeline.append(Block(name, s, e, "presence", {"max_gap": rng.choice([20, 55, 400])}))
    for j in range(rng.randint(0, 2)):
        devices.append(DeviceSpec(f"guest{j}", "PhoneDualUse", registered=False, dhcp=False))
        timeline.append(Block(f"guest{j}", rng.uniform(0, HOUR), rng.uniform(1.5 * HOUR, 2.4 * HOUR), "presence"))
    return _finish(Scenario(f"occupancy-{seed}", devices=devices, timeline=timeline, occupancy_window=window))


def behavior_scenario(seed: int) -> Scenario:
    """One beacon, one stream and one idle device with randomized parameters."""
    rng = random.Random(f"behavior/{seed}")
    span = rng.uniform(1800, 3600)
    devices = [
        DeviceSpec("beacon", "IoTCamera", dhcp=False),
        DeviceSpec("stream", "Workstation", dhcp=False),
        DeviceSpec("idle", "Printer", dhcp=False),
    ]
    period = rng.choice([30, 60, 120])
    timeline = [
        Block("beacon", 0, span, "beacon", {"period": period, "bytes": rng.randint(80, 600),
                                           "jitter": rng.uniform(0, 2), "expect_mode": "PeriodicBeacon"}),
        Block("stream", 0, span, "stream", {"kib_per_window": rng.uniform(120, 400), "expect_mode": "Streaming"}),
        Block("idle", 0, span, "idle", {"extra": rng.randint(0, 2), "expect_mode": "Idle"}),
    ]
    return _finish(Scenario(f"behavior-{seed}", devices=devices, timeline=timeline))


def dependency_scenario(seed: int) -> Scenario:
    """Clients relying on the gateway and on internal servers of very different traffic weight."""
    rng = random.Random(f"dependency/{seed}")
    span = 3600
    devices = [DeviceSpec("gw", "Gateway", dhcp=False)]
    timeline = [Block("gw", 0, span, "serve")]
    servers = [f"srv{i}" for i in range(rng.randint(1, 3))]
    for s in servers:
        devices.append(DeviceSpec(s, "Server", dhcp=False))
        timeline.append(Block(s, 0, span, "serve"))
    clients = [f"c{i}" for i in range(rng.randint(3, 7))]
    for c in clients:
        devices.append(DeviceSpec(c, rng.choice(["Workstation", "PhoneDualUse"]), owner=rng.choice(PEOPLE)))
        timeline.append(Block(c, rng.uniform(0, 200), rng.uniform(3000, span), "browse",
                              {"interval": rng.choice([30, 60, 120])}))
    for s in servers:
        port = rng.choice([123, 514, 2049, 8443])
        heavy = rng.random() < 0.4
        for c in rng.sample(clients, rng.randint(1, len(clients))):
            a = rng.uniform(300, 1500)
            timeline.append(Block(c, a, a + 1200, "use_service",
                                  {"server": s, "port": port, "count": rng.randint(1, 8),
                                   "bytes": 1200 if heavy else 48, "reply_bytes": 1400 if heavy else 48}))
    return _finish(Scenario(f"dependency-{seed}", devices=devices, timeline=timeline))


def throughput_scenario(target_packets: int = 100_000) -> Scenario:
    """Streaming-heavy scenario sized to at least ``target_packets`` frames."""
    # the eight devices together emit a little over 800 frames a minute
    minutes = max(5, -(-target_packets // 800))
    span = minutes * 60
    devices = [DeviceSpec("gw", "Gateway", dhcp=False)]
    timeline = [Block("gw", 0, span, "serve")]
    for i in range(6):
        devices.append(DeviceSpec(f"tv{i}", "Workstation", owner=PEOPLE[i]))
        timeline.append(Block(f"tv{i}", 0, span, "stream"))
    for i in range(2):
        devices.append(DeviceSpec(f"ws{i}", "Workstation", owner=PEOPLE[i]))
        timeline.append(Block(f"ws{i}", 0, span, "browse", {"interval": 10}))
    return _finish(Scenario("throughput", devices=devices, timeline=timeline))


BUILDERS = {
    "office-small": office_small,
}
