"""Offline knowledge tables: OUI vendors, user-agent rules, domain owners, geo, device registry.

All tables are immutable after loading. Lookups never raise; a miss is ``None``.
"""

from __future__ import annotations

import csv
import ipaddress
import json
import logging
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

logger = logging.getLogger(__name__)

OUI_FILE = "oui.csv"
UA_RULES_FILE = "ua_rules.json"
DOMAIN_OWNERS_FILE = "domain_owners.csv"
GEO_FILE = "geo.csv"
REGISTRY_FILE = "registry.csv"
FINGERPRINTS_FILE = "cipher_fingerprints.csv"
VENDOR_MAP_FILE = "vendor_normalization.csv"

CORE_FILES = (OUI_FILE, UA_RULES_FILE, DOMAIN_OWNERS_FILE, GEO_FILE, REGISTRY_FILE)


class UnreadableFile(OSError):
    pass


def normalize_mac(mac: str) -> str:
    hexdigits = re.sub(r"[^0-9a-fA-F]", "", mac).lower()
    if len(hexdigits) != 12:
        raise ValueError(f"not a MAC address: {mac!r}")
    return ":".join(hexdigits[i:i + 2] for i in range(0, 12, 2))


def normalize_domain(name: str) -> str:
    return name.strip().lower().rstrip(".")


class VendorMatch(NamedTuple):
    vendor: str | None
    local_admin: bool = False


@dataclass(frozen=True)
class OuiTable:
    entries: dict[str, str] = field(default_factory=dict)

    def lookup(self, mac: str) -> VendorMatch:
        try:
            prefix = normalize_mac(mac)[:8]
        except ValueError:
            return VendorMatch(None)
        vendor = self.entries.get(prefix)
        if vendor is not None:
            return VendorMatch(vendor)
        return VendorMatch(None, bool(int(prefix[:2], 16) & 0x02))


@dataclass(frozen=True)
class UaRule:
    rule_id: str
    pattern: re.Pattern
    attrs: dict[str, str]


class UaMatch(NamedTuple):
    rule_id: str
    attrs: dict[str, str]


@dataclass(frozen=True)
class UaRuleSet:
    rules: tuple[UaRule, ...] = ()

    def match(self, ua: str) -> UaMatch | None:
        for rule in self.rules:
            if rule.pattern.search(ua):
                return UaMatch(rule.rule_id, dict(rule.attrs))
        return None


class DomainOwner(NamedTuple):
    org: str
    country: str | None


@dataclass(frozen=True)
class DomainOwnershipTable:
    entries: dict[str, DomainOwner] = field(default_factory=dict)

    def lookup(self, fqdn: str) -> DomainOwner | None:
        labels = normalize_domain(fqdn).split(".")
        for i in range(len(labels)):
            hit = self.entries.get(".".join(labels[i:]))
            if hit is not None:
                return hit
        return None


@dataclass(frozen=True)
class GeoTable:
    entries: tuple[tuple[ipaddress.IPv4Network, str], ...] = ()
    _by_len: dict[int, dict[int, str]] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        by_len: dict[int, dict[int, str]] = {}
        for net, country in self.entries:
            plen = net.prefixlen
            # later rows override earlier ones for an identical prefix
            by_len.setdefault(plen, {})[int(net.network_address) >> (32 - plen) if plen else 0] = country
        self._by_len.update(sorted(by_len.items(), reverse=True))

    def lookup(self, ip: str) -> str | None:
        try:
            value = int(ipaddress.IPv4Address(ip))
        except ValueError:
            return None
        for plen, table in self._by_len.items():
            hit = table.get(value >> (32 - plen) if plen else 0)
            if hit is not None:
                return hit
        return None


@dataclass(frozen=True)
class RegistryEntry:
    mac: str
    owner: str
    device_id: str
    device_class: str
    authorized: bool


@dataclass(frozen=True)
class DeviceRegistry:
    entries: dict[str, RegistryEntry] = field(default_factory=dict)

    def lookup(self, mac: str) -> RegistryEntry | None:
        try:
            return self.entries.get(normalize_mac(mac))
        except ValueError:
            return None

    @property
    def persons(self) -> frozenset[str]:
        return frozenset(e.owner for e in self.entries.values() if e.owner)


@dataclass(frozen=True)
class KnowledgeBundle:
    oui: OuiTable = field(default_factory=OuiTable)
    ua_rules: UaRuleSet = field(default_factory=UaRuleSet)
    domains: DomainOwnershipTable = field(default_factory=DomainOwnershipTable)
    geo: GeoTable = field(default_factory=GeoTable)
    registry: DeviceRegistry = field(default_factory=DeviceRegistry)
    fingerprints: dict[str, str] = field(default_factory=dict)
    vendor_map: tuple[tuple[str, str], ...] = ()
    warnings: tuple[str, ...] = ()
    skipped: dict[str, int] = field(default_factory=dict)

    def lookup_vendor(self, mac: str) -> VendorMatch:
        return self.oui.lookup(mac)

    def match_user_agent(self, ua: str) -> UaMatch | None:
        return self.ua_rules.match(ua)

    def lookup_domain_owner(self, fqdn: str) -> DomainOwner | None:
        return self.domains.lookup(fqdn)

    def lookup_geo(self, ip: str) -> str | None:
        return self.geo.lookup(ip)

    def lookup_registration(self, mac: str) -> RegistryEntry | None:
        return self.registry.lookup(mac)

    def normalize_vendor(self, raw: str) -> str | None:
        """Canonical vendor for the first table row whose substring occurs in ``raw``."""
        low = raw.lower()
        for needle, canonical in self.vendor_map:
            if needle.lower() in low:
                return canonical
        return None


def _csv_rows(path: Path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise UnreadableFile(f"{path}: {exc}") from exc
    for lineno, row in enumerate(rows, 1):
        if not row or row[0].lstrip().startswith("#"):
            continue
        yield lineno, [c.strip() for c in row]


def _is_header(lineno: int, row: list[str], first: str) -> bool:
    return lineno == 1 and row[0].lower() == first


def _load_oui(path: Path, skipped: list[int]) -> OuiTable:
    entries: dict[str, str] = {}
    for lineno, row in _csv_rows(path):
        if _is_header(lineno, row, "prefix"):
            continue
        try:
            prefix = normalize_mac(row[0] + "000000")[:8]
            if len(re.sub(r"[^0-9a-fA-F]", "", row[0])) != 6 or not row[1]:
                raise ValueError
        except (ValueError, IndexError):
            skipped[0] += 1
            continue
        entries[prefix] = row[1]
    return OuiTable(entries)


def _load_ua_rules(path: Path, skipped: list[int]) -> UaRuleSet:
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError) as exc:
        raise UnreadableFile(f"{path}: {exc}") from exc
    except json.JSONDecodeError:
        logger.warning("%s: not valid JSON, no rules loaded", path)
        skipped[0] += 1
        return UaRuleSet()
    rules: list[UaRule] = []
    seen: set[str] = set()
    for item in raw if isinstance(raw, list) else []:
        try:
            rule_id = str(item["rule_id"])
            pattern = re.compile(item["pattern"])
            attrs = {str(k): str(v) for k, v in item.get("attrs", {}).items()}
        except (KeyError, TypeError, AttributeError, re.error):
            skipped[0] += 1
            continue
        if rule_id in seen:
            skipped[0] += 1
            continue
        seen.add(rule_id)
        rules.append(UaRule(rule_id, pattern, attrs))
    return UaRuleSet(tuple(rules))


def _load_domains(path: Path, skipped: list[int]) -> DomainOwnershipTable:
    entries: dict[str, DomainOwner] = {}
    for lineno, row in _csv_rows(path):
        if _is_header(lineno, row, "suffix"):
            continue
        if len(row) < 2 or not row[0] or not row[1]:
            skipped[0] += 1
            continue
        country = row[2].upper() if len(row) > 2 and row[2] else None
        entries[normalize_domain(row[0]).lstrip(".")] = DomainOwner(row[1], country)
    return DomainOwnershipTable(entries)


def _load_geo(path: Path, skipped: list[int]) -> GeoTable:
    entries = []
    for lineno, row in _csv_rows(path):
        if _is_header(lineno, row, "cidr"):
            continue
        try:
            net = ipaddress.IPv4Network(row[0], strict=False)
            country = row[1].upper()
            if not country:
                raise ValueError
        except (ValueError, IndexError):
            skipped[0] += 1
            continue
        entries.append((net, country))
    return GeoTable(tuple(entries))


def _load_registry(path: Path, skipped: list[int]) -> DeviceRegistry:
    entries: dict[str, RegistryEntry] = {}
    for lineno, row in _csv_rows(path):
        if _is_header(lineno, row, "mac"):
            continue
        try:
            mac = normalize_mac(row[0])
            flag = row[4].lower()
            if flag not in ("true", "false"):
                raise ValueError
        except (ValueError, IndexError):
            skipped[0] += 1
            continue
        entries[mac] = RegistryEntry(mac, row[1], row[2], row[3], flag == "true")
    return DeviceRegistry(entries)


def _load_pairs(path: Path, skipped: list[int], header: str) -> list[tuple[str, str]]:
    out = []
    for lineno, row in _csv_rows(path):
        if _is_header(lineno, row, header):
            continue
        if len(row) < 2 or not row[0] or not row[1]:
            skipped[0] += 1
            continue
        out.append((row[0], row[1]))
    return out


def load_knowledge(directory: str | os.PathLike | None) -> KnowledgeBundle:
    """Load every table present in ``directory``.

    A missing core file yields an empty table and a warning; malformed lines are
    skipped and counted per file in ``skipped``.
    """
    base = Path(directory) if directory is not None else None
    warnings: list[str] = []
    skipped: dict[str, int] = {}
    loaded = {}
    loaders = {
        OUI_FILE: (_load_oui, OuiTable),
        UA_RULES_FILE: (_load_ua_rules, UaRuleSet),
        DOMAIN_OWNERS_FILE: (_load_domains, DomainOwnershipTable),
        GEO_FILE: (_load_geo, GeoTable),
        REGISTRY_FILE: (_load_registry, DeviceRegistry),
    }
    for name, (loader, empty) in loaders.items():
        path = base / name if base is not None else None
        if path is None or not path.is_file():
            msg = f"knowledge file {name} not found; using an empty table"
            logger.warning(msg)
            warnings.append(msg)
            loaded[name] = empty()
            continue
        count = [0]
        loaded[name] = loader(path, count)
        if count[0]:
            logger.warning("%s: skipped %d malformed entries", path, count[0])
        skipped[name] = count[0]
    fingerprints: dict[str, str] = {}
    vendor_map: list[tuple[str, str]] = []
    if base is not None:
        for name, header in ((FINGERPRINTS_FILE, "fingerprint"), (VENDOR_MAP_FILE, "raw_vendor_substring")):
            path = base / name
            if not path.is_file():
                continue
            count = [0]
            pairs = _load_pairs(path, count, header)
            skipped[name] = count[0]
            if name == FINGERPRINTS_FILE:
                fingerprints = {fp.lower(): stack for fp, stack in pairs}
            else:
                vendor_map = pairs
    return KnowledgeBundle(
        oui=loaded[OUI_FILE],
        ua_rules=loaded[UA_RULES_FILE],
        domains=loaded[DOMAIN_OWNERS_FILE],
        geo=loaded[GEO_FILE],
        registry=loaded[REGISTRY_FILE],
        fingerprints=fingerprints,
        vendor_map=tuple(vendor_map),
        warnings=tuple(warnings),
        skipped=skipped,
    )


def knowledge_digest(directory: str | os.PathLike | None) -> str:
    """Stable hash over the knowledge files present, for run manifests."""
    import hashlib

    h = hashlib.sha256()
    if directory is None:
        return h.hexdigest()
    base = Path(directory)
    for name in CORE_FILES + (FINGERPRINTS_FILE, VENDOR_MAP_FILE, "policies.json"):
        path = base / name
        if path.is_file():
            h.update(name.encode())
            h.update(path.read_bytes())
    return h.hexdigest()
