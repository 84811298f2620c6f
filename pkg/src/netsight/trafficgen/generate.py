"""Scenario -> pcap bytes plus a label sidecar recording what was planted.

Labels come from the generator's own bookkeeping of what it emitted, never
from running the analysis pipeline.
"""

from __future__ import annotations

import ipaddress
import json
import math
import random
import zlib
from collections import Counter
from dataclasses import dataclass, field

from ..ingest import capture_bytes
from ..policy import PolicyKind, parse_policies
from . import wire
from .der import certificate
from .scenario import Block, DeviceSpec, Scenario, intervals, validate
from .world import (
    FORBIDDEN_GEO_ORG,
    FORBIDDEN_SUFFIX_ORG,
    ORGS,
    VENDORS,
    WEB_ORGS,
    Org,
    org_of_domain,
)

US = 1_000_000
UPSTREAM_MAC = "3c:a1:05:ff:ff:fe"
FLOW_TIMEOUT_US = 300 * US
MIN_EVIDENCE = 3
IOT_MIN_QUERIES, IOT_DOMINANCE, IOT_MAX_ORGS = 5, 0.8, 3
SIDECAR_VERSION = 1


@dataclass
class GeneratedCapture:
    pcap: bytes
    sidecar: dict
    packets: list[tuple[int, int, bytes]]

    def sidecar_json(self) -> str:
        return json.dumps(self.sidecar, indent=1, sort_keys=True) + "\n"


@dataclass
class _Facts:
    """What one device did, as the generator emitted it."""

    originated: list[int] = field(default_factory=list)
    dns_names: Counter = field(default_factory=Counter)
    dns_to: Counter = field(default_factory=Counter)
    http_ports: Counter = field(default_factory=Counter)
    user_agents: set = field(default_factory=set)
    hellos: int = 0
    flows_to: Counter = field(default_factory=Counter)
    service_flows: Counter = field(default_factory=Counter)
    dhcp_server_msgs: Counter = field(default_factory=Counter)
    leases: list = field(default_factory=list)


class _Device:
    def __init__(self, spec: DeviceSpec, port_seed: int):
        self.spec = spec
        self.name = spec.name
        self.mac = spec.mac
        self.ip = spec.ip
        self.vendor = VENDORS[spec.vendor_name]
        self._port = 49152 + port_seed % 8192
        self.ident = port_seed & 0xFFFF

    def port(self) -> int:
        p = self._port
        self._port = 49152 if p >= 65535 else p + 1
        return p

    def next_ident(self) -> int:
        self.ident = (self.ident + 1) & 0xFFFF
        return self.ident


class _Generator:
    def __init__(self, sc: Scenario, seed: int):
        self.sc = sc
        self.seed = seed
        self.devices = {d.name: _Device(d, zlib.crc32(f"{seed}:{d.name}".encode())) for d in sc.devices}
        self.gateway = self.devices[sc.gateway.name] if sc.gateway else None
        self.router_mac = self.gateway.mac if self.gateway else UPSTREAM_MAC
        self.facts = {name: _Facts() for name in self.devices}
        self.packets: list[tuple[int, int, bytes]] = []
        self._udp_last: dict[tuple, int] = {}
        self.acks: list[tuple[int, str, str]] = []

    # -- emission -------------------------------------------------------

    def emit(self, t: int, frame: bytes, origin: _Device | None) -> None:
        self.packets.append((t, len(self.packets), frame))
        if origin is not None:
            self.facts[origin.name].originated.append(t)

    def _dst_mac(self, ip: str) -> tuple[str, _Device | None]:
        for d in self.devices.values():
            if d.ip == ip and not d.spec.dhcp:
                return d.mac, d
        return self.router_mac, None

    def udp(self, t: int, dev: _Device, dst_ip: str, sport: int, dport: int, payload: bytes) -> None:
        dst_mac, _ = self._dst_mac(dst_ip)
        self.emit(t, wire.frame_udp(dev.mac, dst_mac, dev.ip, dst_ip, sport, dport, payload, dev.next_ident()), dev)
        key = (dev.ip, sport, dst_ip, dport)
        last = self._udp_last.get(key)
        if last is None or t - last > FLOW_TIMEOUT_US:
            self.facts[dev.name].flows_to[dst_ip] += 1
        self._udp_last[key] = t

    def reply_udp(self, t: int, server_ip: str, server_mac: str, origin: _Device | None, dev: _Device,
                  sport: int, dport: int, payload: bytes) -> None:
        frame = wire.frame_udp(server_mac, dev.mac, server_ip, dev.ip, sport, dport, payload,
                               origin.next_ident() if origin else 0)
        self.emit(t, frame, origin)

    def tcp_exchange(self, t: int, dev: _Device, dst_ip: str, dport: int, request: bytes, response: bytes,
                     extra: tuple[bytes, bytes] | None = None) -> int:
        sport = dev.port()
        dst_mac, server = self._dst_mac(dst_ip)
        isn_c = zlib.crc32(f"c|{dev.name}|{sport}|{t}".encode())
        isn_s = zlib.crc32(f"s|{dst_ip}|{sport}|{t}".encode())
        sid = server.next_ident if server else (lambda: 0)

        def c(t_, seq, ack, flags, data=b""):
            self.emit(t_, wire.frame_tcp(dev.mac, dst_mac, dev.ip, dst_ip, sport, dport, seq, ack, flags, data,
                                         dev.next_ident()), dev)

        def s(t_, seq, ack, flags, data=b""):
            self.emit(t_, wire.frame_tcp(dst_mac, dev.mac, dst_ip, dev.ip, dport, sport, seq, ack, flags, data,
                                         sid()), server)

        c(t, isn_c, 0, wire.TCP_SYN)
        s(t + 400, isn_s, isn_c + 1, wire.TCP_SYN | wire.TCP_ACK)
        c(t + 800, isn_c + 1, isn_s + 1, wire.TCP_ACK)
        c(t + 1000, isn_c + 1, isn_s + 1, wire.TCP_PSH | wire.TCP_ACK, request)
        cs, ss = isn_c + 1 + len(request), isn_s + 1
        s(t + 3000, ss, cs, wire.TCP_PSH | wire.TCP_ACK, response)
        ss += len(response)
        t += 3400
        c(t, cs, ss, wire.TCP_ACK)
        if extra:
            up, down = extra
            if up:
                c(t + 500, cs, ss, wire.TCP_PSH | wire.TCP_ACK, up)
                cs += len(up)
            if down:
                s(t + 1500, ss, cs, wire.TCP_PSH | wire.TCP_ACK, down)
                ss += len(down)
                c(t + 1900, cs, ss, wire.TCP_ACK)
            t += 2000
        self.facts[dev.name].flows_to[dst_ip] += 1
        if server is not None:
            self.facts[dev.name].service_flows[(server.name, dport)] += 1
        return t

    # -- protocol helpers ----------------------------------------------

    def dns(self, t: int, dev: _Device, fqdn: str) -> int:
        gw = self.gateway
        sport = dev.port()
        txid = zlib.crc32(f"{dev.name}|{t}|{fqdn}".encode()) & 0xFFFF
        self.udp(t, dev, gw.ip, sport, 53, wire.dns_query(txid, fqdn))
        org = org_of_domain(fqdn)
        answers = [org.ip_for(fqdn)] if org else []
        self.reply_udp(t + 1500, gw.ip, gw.mac, gw, dev, 53, sport, wire.dns_response(txid, fqdn, answers))
        f = self.facts[dev.name]
        f.dns_names[fqdn] += 1
        f.dns_to[gw.name] += 1
        return t + 2000

    def tls(self, t: int, dev: _Device, org: Org, fqdn: str, app: tuple[int, int] = (0, 0)) -> int:
        rnd = zlib.crc32(f"{dev.name}{t}".encode()).to_bytes(4, "big") * 8
        hello = wire.tls_client_hello(dev.vendor.suites, fqdn, rnd)
        flight = wire.tls_server_flight(dev.vendor.suites[0], rnd[::-1], certificate(org.ca, fqdn, 1 + org.block))
        extra = (wire.tls_app_data(app[0]) if app[0] else b"", wire.tls_app_data(app[1]) if app[1] else b"")
        self.facts[dev.name].hellos += 1
        return self.tcp_exchange(t, dev, org.ip_for(fqdn), 443, hello, flight, extra if any(app) else None)

    def http(self, t: int, dev: _Device, host: str, port: int = 80, uri: str = "/") -> int:
        org = org_of_domain(host)
        ip = org.ip_for(host) if org else "198.18.99.10"
        ua = dev.vendor.user_agent
        f = self.facts[dev.name]
        f.http_ports[port] += 1
        f.user_agents.add(ua)
        return self.tcp_exchange(t, dev, ip, port, wire.http_request("GET", uri, host, ua), wire.http_response(64))

    def lookup_and_connect(self, t: int, dev: _Device, org: Org, fqdn: str, rng: random.Random) -> int:
        t = self.dns(t, dev, fqdn)
        return self.tls(t + 1000, dev, org, fqdn, (rng.randrange(200, 1200), rng.randrange(500, 1400)))

    def dora(self, t: int, dev: _Device) -> int:
        gw = self.gateway
        xid = zlib.crc32(f"{dev.name}|{t}".encode())
        v = dev.vendor
        client_opts = [(12, dev.name.encode()), (60, v.dhcp_vendor_class.encode()), (55, bytes([1, 3, 6, 15, 51]))]
        server_opts = [(54, ipaddress.IPv4Address(gw.ip).packed), (51, (3600).to_bytes(4, "big")),
                       (1, ipaddress.IPv4Address("255.255.255.0").packed), (3, ipaddress.IPv4Address(gw.ip).packed),
                       (6, ipaddress.IPv4Address(gw.ip).packed)]

        def client(t_, mtype, opts):
            payload = wire.dhcp_message(1, xid, dev.mac, mtype, options=opts)
            self.emit(t_, wire.frame_udp(dev.mac, wire.BROADCAST_MAC, "0.0.0.0", "255.255.255.255", 68, 67,
                                         payload, dev.next_ident()), dev)

        def server(t_, mtype):
            payload = wire.dhcp_message(2, xid, dev.mac, mtype, yiaddr=dev.ip, siaddr=gw.ip, options=server_opts)
            self.emit(t_, wire.frame_udp(gw.mac, wire.BROADCAST_MAC, gw.ip, "255.255.255.255", 67, 68,
                                         payload, gw.next_ident()), gw)
            self.facts[dev.name].dhcp_server_msgs[gw.name] += 1

        client(t, wire.DHCP_DISCOVER, client_opts)
        server(t + 10_000, wire.DHCP_OFFER)
        client(t + 20_000, wire.DHCP_REQUEST, [(50, ipaddress.IPv4Address(dev.ip).packed)] + client_opts)
        server(t + 30_000, wire.DHCP_ACK)
        self.acks.append((t + 30_000, dev.ip, dev.mac))
        self.facts[dev.name].leases.append((t + 30_000, dev.ip))
        return t + 40_000

    def release(self, t: int, dev: _Device) -> None:
        gw = self.gateway
        payload = wire.dhcp_message(1, zlib.crc32(f"rel|{dev.name}|{t}".encode()), dev.mac, wire.DHCP_RELEASE,
                                    ciaddr=dev.ip, options=[(54, ipaddress.IPv4Address(gw.ip).packed)])
        self.emit(t, wire.frame_udp(dev.mac, gw.mac, dev.ip, gw.ip, 68, 67, payload, dev.next_ident()), dev)

    # -- patterns -------------------------------------------------------

    def run_block(self, b: Block, rng: random.Random) -> None:
        dev = self.devices[b.device]
        t0 = self.abs_us(b.start) + 2 * US
        t1 = self.abs_us(b.end) - 1 * US
        if t1 <= t0:
            return
        getattr(self, f"_p_{b.pattern}")(dev, t0, t1, b.params, rng)

    def abs_us(self, offset: float) -> int:
        return self.sc.start * US + round(offset * US)

    @staticmethod
    def _times(t0: int, t1: int, interval: float, rng: random.Random, cap: float = 55.0) -> list[int]:
        out, t = [], t0
        while t < t1:
            out.append(t)
            t += round(min(interval * rng.uniform(0.5, 1.5), cap) * US)
        return out

    @staticmethod
    def _spread(t0: int, t1: int, n: int) -> list[int]:
        if n <= 0:
            return []
        step = (t1 - t0) // n
        return [t0 + i * step for i in range(n)]

    def _p_browse(self, dev, t0, t1, p, rng):
        interval = float(p.get("interval", 40))
        http_every = int(p.get("http_every", 4))
        port = int(p.get("http_port", 80))
        orgs = [ORGS[o] for o in p.get("orgs", WEB_ORGS)]
        times = self._times(t0, t1, interval, rng)
        special = rng.sample(range(len(times)), min(len(times), int(p.get("forbidden_queries", 0))))
        geo = set(rng.sample(range(len(times)), min(len(times), int(p.get("geo_sessions", 0)))))
        special = set(special)
        for i, t in enumerate(times):
            if i in special:
                org = ORGS[FORBIDDEN_SUFFIX_ORG]
            elif i in geo:
                org = ORGS[FORBIDDEN_GEO_ORG]
            else:
                org = rng.choice(orgs)
            fqdn = rng.choice(org.domains)
            t = self.lookup_and_connect(t, dev, org, fqdn, rng)
            if http_every and i % http_every == http_every - 1 and i not in special and i not in geo:
                self.http(t + 5000, dev, fqdn, port, rng.choice(["/", "/index.html", "/news", "/search?q=x"]))

    def _p_iot(self, dev, t0, t1, p, rng):
        org = ORGS[dev.vendor.org]
        beacon = org.domains[-1]
        for t in self._times(t0, t1, float(p.get("dns_interval", 300)), rng, cap=1e9):
            self.dns(t, dev, rng.choice(org.domains))
        for t in self._times(t0 + 7 * US, t1, float(p.get("tls_interval", 1800)), rng, cap=1e9):
            self.tls(t, dev, org, rng.choice(org.domains[:-1]), (300, 600))
        http_interval = float(p.get("http_interval", 3600))
        if http_interval > 0:
            for t in self._times(t0 + 13 * US, t1, http_interval, rng, cap=1e9):
                self.http(t, dev, org.domains[1], 80, "/fw/check")
        self._beacon(dev, t0 + 3 * US, t1, float(p.get("beacon_period", 60)), int(p.get("beacon_bytes", 200)),
                     org.ip_for(beacon), 0.0, rng)

    def _p_printer(self, dev, t0, t1, p, rng):
        org = ORGS[dev.vendor.org]
        others = [ORGS[o] for o in p.get("orgs", ("SearchCo", "WeatherNow", "Encyclo"))]
        for i, t in enumerate(self._times(t0, t1, float(p.get("dns_interval", 120)), rng, cap=1e9)):
            other = rng.choice(others)
            self.dns(t, dev, rng.choice(org.domains) if i % 2 == 0 else rng.choice(other.domains))
        for t in self._times(t0 + 11 * US, t1, float(p.get("http_interval", 600)), rng, cap=1e9):
            self.http(t, dev, org.domains[1], int(p.get("http_port", 80)), "/ipp/status")
        for t in self._times(t0 + 17 * US, t1, float(p.get("tls_interval", 3600)), rng, cap=1e9):
            self.tls(t, dev, org, org.domains[0])

    def _p_dns_mix(self, dev, t0, t1, p, rng):
        total = int(p["total"])
        primary = ORGS[p["primary_org"]]
        n_primary = round(float(p["share"]) * total)
        others = [ORGS[o] for o in p.get("other_orgs", WEB_ORGS)]
        names = [rng.choice(primary.domains) for _ in range(n_primary)]
        names += [rng.choice(others[i % len(others)].domains) for i in range(total - n_primary)]
        rng.shuffle(names)
        for t, fqdn in zip(self._spread(t0, t1, total), names):
            self.dns(t, dev, fqdn)

    def _p_forbidden_dns(self, dev, t0, t1, p, rng):
        org = ORGS[FORBIDDEN_SUFFIX_ORG]
        for t in self._spread(t0, t1, int(p.get("count", 1))):
            self.dns(t, dev, rng.choice(org.domains))

    def _p_geo(self, dev, t0, t1, p, rng):
        org = ORGS[p.get("org", FORBIDDEN_GEO_ORG)]
        for t in self._spread(t0, t1, int(p.get("count", 1))):
            self.lookup_and_connect(t, dev, org, rng.choice(org.domains), rng)

    def _p_http_cleartext(self, dev, t0, t1, p, rng):
        host = p.get("host", "www.newsdaily.com")
        for t in self._spread(t0, t1, int(p.get("count", 1))):
            self.http(t, dev, host, int(p.get("port", 80)), "/")

    def _beacon(self, dev, t0, t1, period, size, dst_ip, jitter, rng):
        payload = b"\x42" * max(0, size - 42)
        sport = dev.port()
        # late-only jitter keeps every beat inside the slot it belongs to
        t = t0
        while t < t1:
            shift = round(rng.uniform(0, jitter) * US) if jitter and t > t0 else 0
            self.udp(t + shift, dev, dst_ip, sport, 5683, payload)
            t += round(period * US)

    def _p_beacon(self, dev, t0, t1, p, rng):
        org = ORGS[dev.vendor.org]
        self._beacon(dev, t0, t1, float(p.get("period", 60)), int(p.get("bytes", 200)),
                     org.ip_for(org.domains[-1]), float(p.get("jitter", 0)), rng)

    def _p_stream(self, dev, t0, t1, p, rng):
        per_window = int(float(p.get("kib_per_window", 150)) * 1024)
        window = float(p.get("window", 60))
        frame = 1400
        n = math.ceil(per_window / frame)
        step = window * US / n
        dst = ORGS["VideoHub"].ip_for("edge.videohub.tv")
        sport = dev.port()
        payload = b"\x00" * (frame - 42)
        w = t0
        while w < t1:
            for j in range(n):
                t = w + round(j * step)
                if t >= t1:
                    break
                self.udp(t, dev, dst, sport, 5004, payload)
            w += round(window * US)

    def _p_idle(self, dev, t0, t1, p, rng):
        dst = ORGS[dev.vendor.org].ip_for(ORGS[dev.vendor.org].domains[0])
        sport = dev.port()
        extra = int(p.get("extra", rng.randint(0, 2)))
        # the odd extra packet trails the wake-up or precedes the shutdown; scattered
        # singletons in between could line up into an accidental rhythm
        edge = min(50 * US, (t1 - t0) // 4)
        extras = [rng.choice((t0 + rng.randrange(1, edge), t1 - 1 - rng.randrange(1, edge))) for _ in range(extra)]
        for t in sorted({t0, t1 - 1, *extras}):
            self.udp(t, dev, dst, sport, 4500, b"\x00" * 18)

    def _p_presence(self, dev, t0, t1, p, rng):
        dst = ORGS[dev.vendor.org].ip_for(ORGS[dev.vendor.org].domains[0])
        sport = dev.port()
        max_gap = float(p.get("max_gap", 55))
        t = t0
        while t < t1:
            self.udp(t, dev, dst, sport, 4500, b"\x01" * 24)
            t += round(rng.uniform(5, max_gap) * US)

    def _p_use_service(self, dev, t0, t1, p, rng):
        server = self.devices[p["server"]]
        port = int(p.get("port", 123))
        size = int(p.get("bytes", 48))
        reply = int(p.get("reply_bytes", size))
        for t in self._spread(t0, t1, int(p.get("count", 5))):
            sport = dev.port()
            self.udp(t, dev, server.ip, sport, port, b"\x1b" * size)
            self.facts[dev.name].service_flows[(server.name, port)] += 1
            self.reply_udp(t + 800, server.ip, server.mac, server, dev, port, sport, b"\x1c" * reply)

    def _p_serve(self, dev, t0, t1, p, rng):
        pass

    # -- driver ---------------------------------------------------------

    def run(self) -> None:
        by_device: dict[str, list[Block]] = {}
        for b in self.sc.timeline:
            by_device.setdefault(b.device, []).append(b)
        for name in sorted(by_device):
            dev = self.devices[name]
            if not dev.spec.dhcp:
                continue
            for s, e in intervals(by_device[name]):
                self.dora(self.abs_us(s), dev)
                self.release(self.abs_us(e) - US // 2, dev)
        for i, b in enumerate(self.sc.timeline):
            self.run_block(b, random.Random(f"{self.sc.name}/{self.seed}/{i}/{b.device}/{b.pattern}"))
        self.packets.sort()


def _windows(span: tuple[int, int], wl: int) -> list[tuple[int, int]]:
    first = (span[0] // (wl * US)) * wl
    last = span[1] / US
    n = int((last - first) // wl) + 1
    return [(first + i * wl, first + (i + 1) * wl) for i in range(n)]


def _labels(g: _Generator) -> dict:
    sc = g.sc
    rules = parse_policies(json.dumps(sc.policies))
    emitting = {n: d for n, d in g.devices.items() if g.facts[n].originated}
    devices = []
    for name in sorted(emitting, key=lambda n: emitting[n].mac):
        dev, f, spec = emitting[name], g.facts[name], emitting[name].spec
        labels = {"manufacturer": dev.vendor.name}
        if dev.vendor.user_agent in f.user_agents:
            labels.update(dict(dev.vendor.ua_attrs))
        if f.hellos:
            labels["stack"] = dev.vendor.stack
        if spec.registered and spec.owner:
            labels["owner"] = spec.owner
        owned = Counter()
        for fqdn, n in f.dns_names.items():
            org = org_of_domain(fqdn)
            if org:
                owned[org.name] += n
        iot = None
        for b in sc.timeline:
            if b.device == name and "iot" in b.params:
                iot = bool(b.params["iot"])
        total_owned = sum(owned.values())
        if iot is None and total_owned >= IOT_MIN_QUERIES:
            iot = max(owned.values()) / total_owned >= IOT_DOMINANCE and len(owned) <= IOT_MAX_ORGS
        if iot is not None:
            labels["is_iot"] = "true" if iot else "false"
        mode = next((b.params["expect_mode"] for b in sc.timeline if b.device == name and "expect_mode" in b.params),
                    None)
        if mode:
            labels["behavior_mode"] = mode
        devices.append({
            "device_key": dev.mac,
            "name": name,
            "persona": spec.persona,
            "mac": dev.mac,
            "ip": dev.ip,
            "dhcp": spec.dhcp,
            "owner": spec.owner,
            "registered": spec.registered,
            "authorized": spec.authorized,
            "labels": labels,
            "dns_orgs": dict(sorted(owned.items())),
            "dns_unowned": sum(n for q, n in f.dns_names.items() if org_of_domain(q) is None),
        })
    by_name = {d["name"]: d for d in devices}

    violations = []
    for rule in rules:
        for name in sorted(emitting):
            f, spec, key = g.facts[name], emitting[name].spec, emitting[name].mac
            count = 0
            if rule.kind is PolicyKind.REQUIRE_REGISTERED:
                count = int(not spec.registered or not spec.authorized)
            elif rule.kind is PolicyKind.REQUIRE_ENCRYPTED:
                count = sum(f.http_ports[p] for p in rule.params["ports"])
            elif rule.kind is PolicyKind.FORBID_DEVICE_CLASS:
                count = int(by_name[name]["labels"].get("device_type") == rule.params["class"])
            elif rule.kind is PolicyKind.FORBID_DEST_GEO:
                countries = set(rule.params["countries"])
                blocks = {o.block for o in ORGS.values() if o.country in countries}
                count = sum(n for ip, n in f.flows_to.items()
                            if ip.startswith("198.18.") and int(ip.split(".")[2]) in blocks)
            elif rule.kind is PolicyKind.FORBID_DOMAIN_SUFFIX:
                count = sum(n for q, n in f.dns_names.items()
                            if any(q == s or q.endswith("." + s) for s in rule.params["suffixes"]))
            if count:
                violations.append({"rule_id": rule.rule_id, "device_key": key, "count": count})
    violations.sort(key=lambda v: (v["rule_id"], v["device_key"]))

    span = (g.packets[0][0], g.packets[-1][0]) if g.packets else None
    occupancy = []
    if span is not None:
        wl = sc.occupancy_window
        wins = _windows(span, wl)
        origin = wins[0][0] * US
        present = [set() for _ in wins]
        unattributed = [set() for _ in wins]
        for name, dev in emitting.items():
            spec = dev.spec
            for t in g.facts[name].originated:
                i = (t - origin) // (wl * US)
                if spec.registered and spec.owner:
                    present[i].add(spec.owner)
                else:
                    unattributed[i].add(name)
        occupancy = [{"start": s, "end": e, "count": len(present[i]), "persons": sorted(present[i]),
                      "unattributed_devices": len(unattributed[i])} for i, (s, e) in enumerate(wins)]

    l2 = set()
    for _, _, frame in g.packets:
        dst, src = frame[0:6].hex(":"), frame[6:12].hex(":")
        if frame[0] & 1 or src == dst:
            continue
        l2.add(tuple(sorted((src, dst))))

    deps = []
    for name in sorted(emitting):
        f, key = g.facts[name], emitting[name].mac
        for provider, n in sorted(f.dns_to.items()):
            if n >= MIN_EVIDENCE:
                deps.append({"dependent": key, "provider": g.devices[provider].mac, "service": "DNS",
                             "evidence_count": n})
        for provider, n in sorted(f.dhcp_server_msgs.items()):
            if n >= MIN_EVIDENCE:
                deps.append({"dependent": key, "provider": g.devices[provider].mac, "service": "DHCP",
                             "evidence_count": n})
    users: dict[tuple[str, int], dict[str, int]] = {}
    for name in emitting:
        for (server, port), n in g.facts[name].service_flows.items():
            if port in (53, 67, 68):
                continue
            users.setdefault((server, port), {})[name] = n
    for (server, port), per_dev in sorted(users.items()):
        if len(per_dev) < 2:
            continue
        for name, n in sorted(per_dev.items()):
            if n >= MIN_EVIDENCE:
                deps.append({"dependent": g.devices[name].mac, "provider": g.devices[server].mac,
                             "service": f"Other({port})", "evidence_count": n})
    deps.sort(key=lambda d: (d["provider"], d["service"], d["dependent"]))

    acks = sorted(g.acks)
    epochs = []
    for ip in sorted({a[1] for a in acks}):
        seq = []
        for ts, _, mac in (a for a in acks if a[1] == ip):
            if not seq or seq[-1][1] != mac:
                seq.append((ts, mac))
        for i, (ts, mac) in enumerate(seq):
            end = seq[i + 1][0] if i + 1 < len(seq) else None
            epochs.append({"ip": ip, "mac": mac, "start": ts / US, "end": None if end is None else end / US})

    return {
        "schema_version": SIDECAR_VERSION,
        "scenario": sc.name,
        "packets": len(g.packets),
        "span": [span[0] / US, span[1] / US] if span else None,
        "devices": devices,
        "persons": sorted({d.owner for d in sc.devices if d.owner and d.registered}),
        "violations": violations,
        "occupancy": {"window_len": sc.occupancy_window, "windows": occupancy},
        "topology": {"l2_edges": sorted([list(e) for e in l2]), "dependencies": deps},
        "epochs": epochs,
        "policies": sc.policies,
    }


def registry_rows(sc: Scenario) -> list[dict]:
    cls = {"Gateway": "router", "Workstation": "workstation", "PhoneDualUse": "phone", "IoTCamera": "camera",
           "Printer": "printer", "Server": "server"}
    return [{"mac": d.mac, "owner": d.owner, "device_id": d.name, "device_class": cls[d.persona],
             "authorized": d.authorized} for d in sc.devices if d.registered]


def generate(sc: Scenario, seed: int = 0) -> GeneratedCapture:
    """Deterministic for (scenario, seed)."""
    validate(sc)
    g = _Generator(sc, seed)
    g.run()
    packets = [(t // US, t % US, frame) for t, _, frame in g.packets]
    sidecar = _labels(g)
    sidecar["seed"] = seed
    return GeneratedCapture(capture_bytes(packets), sidecar, packets)
