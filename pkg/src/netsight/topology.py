"""Passive L2/L3 graphs, service dependencies, and resiliency structure.

Everything here reflects what a single observation point can see: the L2
graph is the set of MAC pairs exchanging unicast frames past the tap, not the
switch fabric behind it.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .decoders.types import DhcpMessageType
from .pipeline.identity import IdentityResolver, is_host_address

GW_K = 5
MIN_EVIDENCE = 3
HIDDEN_K = 3
HIDDEN_SHARE = 0.01
_INFRA_PORTS = frozenset({53, 67, 68})


def _is_group(mac: str) -> bool:
    return int(mac[:2], 16) & 1 == 1


@dataclass
class L2Graph:
    nodes: dict[str, dict] = field(default_factory=dict)
    edges: dict[tuple[str, str], int] = field(default_factory=dict)
    group_frames: int = 0
    src_ips: dict[str, set[str]] = field(default_factory=dict)
    dst_ips: dict[str, set[str]] = field(default_factory=dict)

    def add_frame(self, src_mac: str | None, dst_mac: str | None, src_ip: str | None = None,
                  dst_ip: str | None = None) -> None:
        if not src_mac or _is_group(src_mac):
            return
        self.nodes.setdefault(src_mac, {"is_gateway_candidate": False})
        if src_ip:
            self.src_ips.setdefault(src_mac, set()).add(src_ip)
        if not dst_mac or _is_group(dst_mac):
            self.group_frames += 1
            return
        self.nodes.setdefault(dst_mac, {"is_gateway_candidate": False})
        if dst_ip:
            self.dst_ips.setdefault(dst_mac, set()).add(dst_ip)
        if src_mac == dst_mac:
            return
        key = (src_mac, dst_mac) if src_mac < dst_mac else (dst_mac, src_mac)
        self.edges[key] = self.edges.get(key, 0) + 1

    @property
    def gateways(self) -> list[str]:
        return sorted(m for m, f in self.nodes.items() if f["is_gateway_candidate"])


def build_l2(frames: Iterable) -> L2Graph:
    """Frames need ``src_mac``/``dst_mac`` and may carry ``src_ip``/``dst_ip``."""
    g = L2Graph()
    for f in frames:
        g.add_frame(f.src_mac, f.dst_mac, getattr(f, "src_ip", None), getattr(f, "dst_ip", None))
    return g


def infer_gateways(graph: L2Graph, frames: Iterable = (), gw_k: int = GW_K) -> set[str]:
    """Flag MACs seen as source for >= gw_k source IPs or destination for >= gw_k destination IPs."""
    for f in frames:
        graph.add_frame(f.src_mac, f.dst_mac, getattr(f, "src_ip", None), getattr(f, "dst_ip", None))
    found = set()
    for mac in graph.nodes:
        if len(graph.src_ips.get(mac, ())) >= gw_k or len(graph.dst_ips.get(mac, ())) >= gw_k:
            found.add(mac)
    for mac in found:
        graph.nodes[mac]["is_gateway_candidate"] = True
    return found


@dataclass
class L3Graph:
    nodes: dict[str, dict] = field(default_factory=dict)
    edges: dict[tuple[str, str], list[int]] = field(default_factory=dict)

    def _node(self, name: str, internal: bool, role: str) -> None:
        node = self.nodes.setdefault(name, {"is_internal": internal, "roles": set()})
        node["roles"].add(role)

    def internal_adjacency(self) -> dict[str, set[str]]:
        adj = {n: set() for n, f in self.nodes.items() if f["is_internal"]}
        for a, b in self.edges:
            if a in adj and b in adj and a != b:
                adj[a].add(b)
                adj[b].add(a)
        return adj


def _endpoint(resolver: IdentityResolver, ip: str, ts: float, mac: str | None) -> tuple[str, bool]:
    key = resolver.resolve(ip, ts, mac)
    return (key, True) if key is not None else (ip, False)


def build_l3(flows: Iterable, resolver: IdentityResolver) -> L3Graph:
    """Directed originator -> responder edges weighted by flow count and payload bytes."""
    g = L3Graph()
    for fl in flows:
        (o_ip, _), (r_ip, _) = fl.originator, fl.responder
        if not (is_host_address(o_ip) and is_host_address(r_ip)):
            continue
        src, s_int = _endpoint(resolver, o_ip, fl.first_ts, fl.orig_mac)
        dst, d_int = _endpoint(resolver, r_ip, fl.first_ts, fl.resp_mac)
        g._node(src, s_int, "client")
        g._node(dst, d_int, "server")
        w = g.edges.setdefault((src, dst), [0, 0])
        w[0] += 1
        w[1] += fl.total_bytes
    return g


@dataclass(frozen=True, order=True)
class DependencyEdge:
    provider: str
    service: str
    dependent: str
    evidence_count: int

    def as_dict(self) -> dict:
        return {"dependent": self.dependent, "provider": self.provider, "service": self.service,
                "evidence_count": self.evidence_count}


def infer_dependencies(events, resolver: IdentityResolver, min_evidence: int = MIN_EVIDENCE
                       ) -> list[DependencyEdge]:
    """Service dependencies from DNS queries, DHCP server replies and shared internal services.

    ``events`` needs ``dns``, ``dhcp`` and ``flows`` sequences.
    """
    counts: Counter[tuple[str, str, str]] = Counter()
    for ev in events.dns:
        if ev.is_response:
            continue
        dep = resolver.resolve(ev.src_ip, ev.ts, ev.src_mac)
        if dep is None or not is_host_address(ev.dst_ip):
            continue
        prov = resolver.resolve(ev.dst_ip, ev.ts, ev.dst_mac) or ev.dst_ip
        counts[(prov, "DNS", dep)] += 1
    for ev in events.dhcp:
        if ev.msg_type not in (DhcpMessageType.OFFER, DhcpMessageType.ACK) or not is_host_address(ev.src_ip):
            continue
        dep = resolver.key_for_mac(ev.client_mac)
        if dep is None:
            continue
        prov = resolver.resolve(ev.src_ip, ev.ts, ev.src_mac) or ev.src_ip
        counts[(prov, "DHCP", dep)] += 1
    per_service: dict[tuple[str, int], Counter[str]] = {}
    for fl in events.flows:
        port = fl.responder[1]
        if port in _INFRA_PORTS:
            continue
        dep = resolver.resolve(fl.originator[0], fl.first_ts, fl.orig_mac)
        prov = resolver.resolve(fl.responder[0], fl.first_ts, fl.resp_mac)
        if dep is None or prov is None or dep == prov:
            continue
        per_service.setdefault((prov, port), Counter())[dep] += 1
    for (prov, port), deps in per_service.items():
        if len(deps) < 2:
            continue
        for dep, n in deps.items():
            counts[(prov, f"Other({port})", dep)] += n
    return sorted(
        DependencyEdge(p, s, d, n) for (p, s, d), n in counts.items() if n >= min_evidence and p != d
    )


def _adjacency(graph) -> dict:
    if isinstance(graph, L3Graph):
        return graph.internal_adjacency()
    adj: dict = {}
    for v, ws in graph.items():
        adj.setdefault(v, set())
        for w in ws:
            if w != v:
                adj[v].add(w)
                adj.setdefault(w, set()).add(v)
    return adj


def find_articulation_points(graph: L3Graph | Mapping) -> list:
    """Cut vertices of the undirected view (internal nodes only for an L3Graph).

    Accepts an L3Graph or an adjacency mapping; iterative so deep graphs do
    not hit the recursion limit.
    """
    adj = {v: sorted(ws) for v, ws in _adjacency(graph).items()}
    disc: dict = {}
    low: dict = {}
    cut = set()
    clock = 0
    for root in sorted(adj):
        if root in disc:
            continue
        disc[root] = low[root] = clock
        clock += 1
        children = 0
        stack = [(root, None, iter(adj[root]))]
        while stack:
            v, parent, it = stack[-1]
            for w in it:
                if w not in disc:
                    disc[w] = low[w] = clock
                    clock += 1
                    if v == root:
                        children += 1
                    stack.append((w, v, iter(adj[w])))
                    break
                if w != parent and disc[w] < low[v]:
                    low[v] = disc[w]
            else:
                stack.pop()
                if parent is not None:
                    if low[v] < low[parent]:
                        low[parent] = low[v]
                    if parent != root and low[v] >= disc[parent]:
                        cut.add(parent)
        if children > 1:
            cut.add(root)
    return sorted(cut)


@dataclass
class ResiliencyReport:
    articulation_points: list[str]
    fan_in_ranking: list[tuple[str, int]]
    hidden_components: list[str]
    byte_shares: dict[str, float]

    def as_dict(self) -> dict:
        return {
            "articulation_points": self.articulation_points,
            "fan_in_ranking": [{"provider": p, "dependents": n} for p, n in self.fan_in_ranking],
            "hidden_components": self.hidden_components,
            "byte_shares": {p: round(s, 9) for p, s in sorted(self.byte_shares.items())},
        }


def byte_shares(graph: L3Graph, providers: Iterable[str]) -> dict[str, float]:
    """Each provider's share of bytes on edges that touch at least one internal node."""
    internal = {n for n, f in graph.nodes.items() if f["is_internal"]}
    touched = {k: w[1] for k, w in graph.edges.items() if k[0] in internal or k[1] in internal}
    total = math.fsum(touched.values())
    out = {}
    for p in providers:
        own = math.fsum(b for (a, c), b in touched.items() if p in (a, c))
        out[p] = own / total if total > 0 else 0.0
    return out


def report_resiliency(graph: L3Graph, dependencies: Iterable[DependencyEdge], hidden_k: int = HIDDEN_K,
                      hidden_share: float = HIDDEN_SHARE) -> ResiliencyReport:
    dependents: dict[str, set[str]] = {}
    for d in dependencies:
        dependents.setdefault(d.provider, set()).add(d.dependent)
    ranking = sorted(((p, len(ds)) for p, ds in dependents.items()), key=lambda x: (-x[1], x[0]))
    shares = byte_shares(graph, dependents)
    hidden = [p for p, n in ranking if n >= hidden_k and shares[p] < hidden_share]
    aps = find_articulation_points(graph) if graph.nodes else []
    return ResiliencyReport(aps, ranking, hidden, shares)


def l2_as_dict(graph: L2Graph) -> dict:
    return {
        "nodes": [{"mac": m, "is_gateway_candidate": graph.nodes[m]["is_gateway_candidate"]}
                  for m in sorted(graph.nodes)],
        "edges": [{"a": a, "b": b, "frames": n} for (a, b), n in sorted(graph.edges.items())],
        "group_frames": graph.group_frames,
    }


def l3_as_dict(graph: L3Graph) -> dict:
    return {
        "nodes": [{"id": n, "is_internal": f["is_internal"], "roles": sorted(f["roles"])}
                  for n, f in sorted(graph.nodes.items())],
        "edges": [{"src": a, "dst": b, "flows": w[0], "bytes": w[1]} for (a, b), w in sorted(graph.edges.items())],
    }


def topology_json(l2: L2Graph, l3: L3Graph, dependencies: Iterable[DependencyEdge],
                  report: ResiliencyReport) -> str:
    doc = {
        "l2": l2_as_dict(l2),
        "l3": l3_as_dict(l3),
        "dependencies": [d.as_dict() for d in sorted(dependencies)],
        "resiliency": report.as_dict(),
    }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def resiliency_ndjson(report: ResiliencyReport) -> str:
    shares = report.byte_shares
    hidden = set(report.hidden_components)
    lines = []
    for p, n in report.fan_in_ranking:
        rec = {"provider": p, "dependents": n, "byte_share": round(shares.get(p, 0.0), 9), "hidden": p in hidden}
        lines.append(json.dumps(rec, sort_keys=True, separators=(",", ":")))
    for v in report.articulation_points:
        lines.append(json.dumps({"articulation_point": v}, sort_keys=True, separators=(",", ":")))
    return "".join(line + "\n" for line in lines)


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(graph: L2Graph | L3Graph) -> str:
    if isinstance(graph, L2Graph):
        lines = ["graph l2 {"]
        for m in sorted(graph.nodes):
            gw = graph.nodes[m]["is_gateway_candidate"]
            lines.append(f"  {_q(m)} [label={_q(m + (' (gw)' if gw else ''))}];")
        for (a, b), n in sorted(graph.edges.items()):
            lines.append(f"  {_q(a)} -- {_q(b)} [label=\"{n}\"];")
    else:
        lines = ["digraph l3 {"]
        for n, f in sorted(graph.nodes.items()):
            shape = "box" if f["is_internal"] else "ellipse"
            lines.append(f"  {_q(n)} [shape={shape}, label={_q(n + ' ' + ','.join(sorted(f['roles'])))}];")
        for (a, b), w in sorted(graph.edges.items()):
            lines.append(f"  {_q(a)} -> {_q(b)} [label=\"{w[0]} flows, {w[1]} B\"];")
    lines.append("}")
    return "\n".join(lines) + "\n"
