"""Declarative network-use policies and their evaluation against a run."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Mapping

from .knowledge import KnowledgeBundle, normalize_domain


class PolicyError(ValueError):
    pass


class ParseError(PolicyError):
    def __init__(self, message: str, line: int | None = None, field_path: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field_path:
            where.append(field_path)
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.line = line
        self.field = field_path


class DuplicateRuleId(PolicyError):
    pass


class PolicyKind(str, Enum):
    REQUIRE_REGISTERED = "RequireRegistered"
    REQUIRE_ENCRYPTED = "RequireEncrypted"
    FORBID_DEVICE_CLASS = "ForbidDeviceClass"
    FORBID_DEST_GEO = "ForbidDestGeo"
    FORBID_DOMAIN_SUFFIX = "ForbidDomainSuffix"


DEFAULT_CLEARTEXT_PORTS = (80, 8080)


@dataclass(frozen=True)
class PolicyRule:
    rule_id: str
    kind: PolicyKind
    params: dict[str, Any] = field(default_factory=dict)


@dataclass
class Violation:
    rule_id: str
    device_key: str
    ts: float
    evidence: str
    count: int = 1

    def as_dict(self) -> dict:
        return {"rule_id": self.rule_id, "device_key": self.device_key, "ts": self.ts,
                "count": self.count, "evidence": self.evidence}


def _line_of(text: str, needle: str) -> int | None:
    pos = text.find(needle)
    return text.count("\n", 0, pos) + 1 if pos >= 0 else None


def _check_params(kind: PolicyKind, params: dict, where: str) -> dict:
    if kind is PolicyKind.FORBID_DEVICE_CLASS:
        cls = params.get("class")
        if not isinstance(cls, str) or not cls:
            raise ParseError("ForbidDeviceClass needs a nonempty 'class'", field_path=f"{where}.params.class")
        return {"class": cls}
    if kind is PolicyKind.FORBID_DEST_GEO:
        countries = params.get("countries")
        if not isinstance(countries, list) or not countries:
            raise ParseError("ForbidDestGeo needs a nonempty 'countries' list", field_path=f"{where}.params.countries")
        return {"countries": sorted({str(c).upper() for c in countries})}
    if kind is PolicyKind.FORBID_DOMAIN_SUFFIX:
        suffixes = params.get("suffixes")
        if not isinstance(suffixes, list) or not suffixes:
            raise ParseError("ForbidDomainSuffix needs a nonempty 'suffixes' list", field_path=f"{where}.params.suffixes")
        return {"suffixes": sorted({normalize_domain(str(s)).lstrip(".") for s in suffixes})}
    if kind is PolicyKind.REQUIRE_ENCRYPTED:
        ports = params.get("ports", list(DEFAULT_CLEARTEXT_PORTS))
        if not isinstance(ports, list) or not ports or not all(isinstance(p, int) for p in ports):
            raise ParseError("RequireEncrypted 'ports' must be a nonempty integer list", field_path=f"{where}.params.ports")
        return {"ports": sorted(set(ports))}
    return {}


def parse_policies(text: str) -> list[PolicyRule]:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.lineno) from exc
    if not isinstance(raw, list):
        raise ParseError("policy file must be a JSON array", 1)
    rules: list[PolicyRule] = []
    seen: set[str] = set()
    for i, item in enumerate(raw):
        where = f"[{i}]"
        if not isinstance(item, dict):
            raise ParseError("rule must be an object", field_path=where)
        rule_id = item.get("rule_id")
        line = _line_of(text, f'"{rule_id}"') if rule_id else None
        if not isinstance(rule_id, str) or not rule_id:
            raise ParseError("missing rule_id", line, f"{where}.rule_id")
        try:
            kind = PolicyKind(item.get("kind"))
        except ValueError:
            raise ParseError(f"unknown kind {item.get('kind')!r}", line, f"{where}.kind") from None
        params = item.get("params", {})
        if not isinstance(params, dict):
            raise ParseError("params must be an object", line, f"{where}.params")
        try:
            checked = _check_params(kind, params, where)
        except ParseError as exc:
            raise ParseError(str(exc).split(" (")[0], line, exc.field) from None
        if rule_id in seen:
            raise DuplicateRuleId(rule_id)
        seen.add(rule_id)
        rules.append(PolicyRule(rule_id, kind, checked))
    return rules


def load_policies(path: str | os.PathLike) -> list[PolicyRule]:
    return parse_policies(Path(path).read_text(encoding="utf-8"))


def _suffix_match(name: str, suffixes: Iterable[str]) -> str | None:
    name = normalize_domain(name)
    for s in suffixes:
        if name == s or name.endswith("." + s):
            return s
    return None


class _Collector:
    def __init__(self):
        self.found: dict[tuple[str, str], Violation] = {}

    def add(self, rule_id: str, device: str, ts: float, evidence: str) -> None:
        key = (rule_id, device)
        v = self.found.get(key)
        if v is None:
            self.found[key] = Violation(rule_id, device, ts, evidence, 1)
            return
        v.count += 1
        if ts < v.ts:
            v.ts, v.evidence = ts, evidence


def evaluate_policies(rules: Iterable[PolicyRule], profiles: Mapping, events, knowledge: KnowledgeBundle,
                      resolver=None) -> list[Violation]:
    """Violations deduplicated per (rule, device) with occurrence counts.

    ``profiles`` maps device key to DeviceProfile; ``events`` carries ``http``,
    ``dns`` and ``flows`` lists; ``resolver`` maps addresses to device keys
    (defaults to ``events.resolver``).
    """
    resolver = resolver or events.resolver
    out = _Collector()

    def device(ip: str, ts: float, mac: str | None = None) -> str | None:
        key = resolver.resolve(ip, ts, mac)
        return key if key in profiles else None

    for rule in rules:
        rid = rule.rule_id
        if rule.kind is PolicyKind.REQUIRE_REGISTERED:
            for key in sorted(profiles):
                prof = profiles[key]
                mac = prof.mac
                entry = knowledge.lookup_registration(mac) if mac else None
                if entry is None:
                    out.add(rid, key, prof.first_seen or 0.0, f"{mac or key} not in device registry")
                elif not entry.authorized:
                    out.add(rid, key, prof.first_seen or 0.0, f"{mac} registered but not authorized")
        elif rule.kind is PolicyKind.REQUIRE_ENCRYPTED:
            ports = set(rule.params["ports"])
            for ev in events.http:
                if ev.dst_port not in ports:
                    continue
                key = device(ev.src_ip, ev.ts, ev.src_mac)
                if key:
                    out.add(rid, key, ev.ts, f"cleartext HTTP {ev.method} {ev.host or ev.dst_ip}{ev.uri} port {ev.dst_port}")
        elif rule.kind is PolicyKind.FORBID_DEVICE_CLASS:
            cls = rule.params["class"]
            for key in sorted(profiles):
                prof = profiles[key]
                res = prof.attributes.get("device_type")
                if res is not None and res.value == cls:
                    ts = min((c.ts for c in prof.claims if c.attribute == "device_type" and c.value == cls),
                             default=prof.first_seen or 0.0)
                    out.add(rid, key, ts, f"device_type {cls}")
        elif rule.kind is PolicyKind.FORBID_DEST_GEO:
            countries = set(rule.params["countries"])
            for fl in events.flows:
                r_ip = fl.responder[0]
                country = knowledge.lookup_geo(r_ip)
                if country not in countries:
                    continue
                key = device(fl.originator[0], fl.first_ts, fl.orig_mac)
                if key:
                    out.add(rid, key, fl.first_ts, f"flow to {r_ip}:{fl.responder[1]} in {country}")
        elif rule.kind is PolicyKind.FORBID_DOMAIN_SUFFIX:
            suffixes = rule.params["suffixes"]
            for ev in events.dns:
                if ev.is_response:
                    continue
                hit = _suffix_match(ev.query_name, suffixes)
                if hit is None:
                    continue
                key = device(ev.src_ip, ev.ts, ev.src_mac)
                if key:
                    out.add(rid, key, ev.ts, f"DNS query {ev.query_name} matches {hit}")
    return sorted(out.found.values(), key=lambda v: (v.rule_id, v.device_key))


def report_violations(violations: Iterable[Violation], fmt: str = "ndjson") -> str:
    ordered = sorted(violations, key=lambda v: (v.rule_id, v.device_key))
    if fmt == "ndjson":
        return "".join(json.dumps(v.as_dict(), sort_keys=True, separators=(",", ":")) + "\n" for v in ordered)
    if fmt == "text":
        return "".join(f"{v.rule_id}\t{v.device_key}\tcount={v.count}\tts={v.ts}\t{v.evidence}\n" for v in ordered)
    raise ValueError(f"unknown format {fmt!r}")
