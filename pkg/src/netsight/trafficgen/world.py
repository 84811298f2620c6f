"""The fixed toy Internet the generator draws from, and its knowledge files.

Vendors, organizations, address blocks and fingerprints here are invented;
``write_knowledge`` renders them as the tables the analyzers read.
"""

from __future__ import annotations

import csv
import json
import os
import zlib
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class Org:
    name: str
    domains: tuple[str, ...]
    block: int  # third octet inside 198.18.0.0/16
    country: str
    ca: str

    def ip_for(self, fqdn: str) -> str:
        return f"198.18.{self.block}.{10 + zlib.crc32(fqdn.encode()) % 240}"

    @property
    def cidr(self) -> str:
        return f"198.18.{self.block}.0/24"


@dataclass(frozen=True)
class Vendor:
    name: str
    oui: str
    org: str
    dhcp_vendor_class: str
    user_agent: str
    suites: tuple[int, ...]
    stack: str
    ua_attrs: tuple[tuple[str, str], ...]


ORGS: dict[str, Org] = {o.name: o for o in [
    Org("AcmeCam Inc", ("telemetry.acmecam.net", "fw.acmecam.net", "api.acmecam.net", "stream.acmecam-cloud.com"),
        1, "US", "AcmeCam Device CA"),
    Org("PrintCo Ltd", ("updates.printco.com", "eprint.printco.com", "time.printco.com"), 2, "GB", "PrintCo Root CA"),
    Org("Deskbyte Corp", ("update.deskbyte.com", "login.deskbyte.com", "store.deskbyte.com"), 3, "US",
        "GlobalTrust RSA CA"),
    Org("Fonix Mobile", ("push.fonix.io", "sync.fonix.io", "apps.fonix.io"), 4, "FI", "Fonix Services CA"),
    Org("Routek Networks", ("ntp.routek.net", "fw.routek.net"), 5, "TW", "Routek CA"),
    Org("Rackly Systems", ("mgmt.rackly.com", "license.rackly.com"), 6, "US", "Rackly CA"),
    Org("SearchCo", ("www.searchco.com", "api.searchco.com", "img.searchco.com"), 20, "US", "GlobalTrust RSA CA"),
    Org("NewsDaily", ("www.newsdaily.com", "cdn.newsdaily.com"), 21, "GB", "GlobalTrust RSA CA"),
    Org("VideoHub", ("www.videohub.tv", "edge.videohub.tv"), 22, "US", "Verity TLS CA"),
    Org("ShopMart", ("www.shopmart.com", "checkout.shopmart.com"), 23, "DE", "Verity TLS CA"),
    Org("SocialNet", ("www.socialnet.com", "chat.socialnet.com", "media.socialnet.com"), 24, "US",
        "GlobalTrust RSA CA"),
    Org("MailBox", ("mail.mailbox.email", "app.mailbox.email"), 25, "CH", "Verity TLS CA"),
    Org("CloudDrive", ("files.clouddrive.net", "sync.clouddrive.net"), 26, "IE", "GlobalTrust RSA CA"),
    Org("MapWorld", ("tiles.mapworld.com", "www.mapworld.com"), 27, "NL", "Verity TLS CA"),
    Org("WeatherNow", ("api.weathernow.com", "www.weathernow.com"), 28, "CA", "GlobalTrust RSA CA"),
    Org("MusicBox", ("play.musicbox.fm", "www.musicbox.fm"), 29, "SE", "Verity TLS CA"),
    Org("Encyclo", ("www.encyclo.org", "static.encyclo.org"), 30, "US", "Verity TLS CA"),
    Org("DevHub", ("www.devhub.io", "git.devhub.io"), 31, "US", "GlobalTrust RSA CA"),
    Org("BetZone", ("www.betzone.bet", "live.betzone.bet"), 40, "MT", "Verity TLS CA"),
    Org("OffshoreHost", ("files.offshorehost.xr", "panel.offshorehost.xr"), 41, "XR", "Offshore CA"),
]}

WEB_ORGS = ("SearchCo", "NewsDaily", "VideoHub", "ShopMart", "SocialNet", "MailBox", "CloudDrive", "MapWorld",
            "WeatherNow", "MusicBox", "Encyclo", "DevHub")
FORBIDDEN_SUFFIX_ORG = "BetZone"
FORBIDDEN_SUFFIX = "bet"
FORBIDDEN_GEO_ORG = "OffshoreHost"
FORBIDDEN_COUNTRY = "XR"

VENDORS: dict[str, Vendor] = {v.name: v for v in [
    Vendor("AcmeCam", "3c:a1:01", "AcmeCam Inc", "acmecam-fw 2.4.1", "AcmeCam/2.4 (EmbeddedLinux; camera)",
           (0xC02B, 0xC02F, 0x009C, 0x002F), "acmecam-mbedtls",
           (("os", "EmbeddedLinux"), ("device_type", "camera"))),
    Vendor("PrintCo", "3c:a1:02", "PrintCo Ltd", "PrintCo LaserSeries", "PrintCo-Firmware/3.2 (printer)",
           (0x009C, 0x002F, 0x0035), "printco-tls",
           (("os", "PrintCoFW"), ("device_type", "printer"))),
    Vendor("Deskbyte", "3c:a1:03", "Deskbyte Corp", "MSFT 5.0",
           "Mozilla/5.0 (DeskOS 11; x64) Browsely/120.0",
           (0x1301, 0x1302, 0x1303, 0xC02B, 0xC02F, 0xC02C, 0xC030), "browsely-desk",
           (("os", "DeskOS"), ("browser", "Browsely"), ("device_type", "workstation"))),
    Vendor("Fonix", "3c:a1:04", "Fonix Mobile", "fonix-phone 14",
           "Mozilla/5.0 (FonixOS 14; Mobile) Browsely/118.0 Mobile",
           (0x1301, 0x1303, 0x1302, 0xCCA9, 0xC02B), "fonix-boring",
           (("os", "FonixOS"), ("browser", "Browsely"), ("device_type", "phone"))),
    Vendor("Routek", "3c:a1:05", "Routek Networks", "routek-gw", "Routek-Updater/1.0",
           (0xC02F, 0x009C), "routek-tls", (("os", "RoutekOS"), ("device_type", "router"))),
    Vendor("Rackly", "3c:a1:06", "Rackly Systems", "rackly-bmc", "Rackly-Agent/5.1",
           (0x1302, 0x1301, 0xC030), "rackly-openssl", (("os", "RacklyLinux"), ("device_type", "server"))),
]}

PERSONA_VENDOR = {
    "Gateway": "Routek",
    "Workstation": "Deskbyte",
    "PhoneDualUse": "Fonix",
    "IoTCamera": "AcmeCam",
    "Printer": "PrintCo",
    "Server": "Rackly",
}

# UA rules are ordered: the phone rule must precede the generic desktop one
_UA_RULES = [
    {"rule_id": "fonix-phone", "pattern": r"FonixOS \d+; Mobile", "attrs": dict(VENDORS["Fonix"].ua_attrs)},
    {"rule_id": "deskos-browsely", "pattern": r"DeskOS \d+;.*Browsely/", "attrs": dict(VENDORS["Deskbyte"].ua_attrs)},
    {"rule_id": "acmecam", "pattern": r"^AcmeCam/", "attrs": dict(VENDORS["AcmeCam"].ua_attrs)},
    {"rule_id": "printco", "pattern": r"^PrintCo-Firmware/", "attrs": dict(VENDORS["PrintCo"].ua_attrs)},
    {"rule_id": "routek", "pattern": r"^Routek-Updater/", "attrs": dict(VENDORS["Routek"].ua_attrs)},
    {"rule_id": "rackly", "pattern": r"^Rackly-Agent/", "attrs": dict(VENDORS["Rackly"].ua_attrs)},
]

_VENDOR_NORMALIZATION = [
    ("acmecam", "AcmeCam"),
    ("printco", "PrintCo"),
    ("deskbyte", "Deskbyte"),
    ("fonix", "Fonix"),
    ("routek", "Routek"),
    ("rackly", "Rackly"),
]


def registrable(fqdn: str) -> str:
    return ".".join(fqdn.split(".")[-2:])


def domain_owner_rows() -> list[tuple[str, str, str]]:
    rows = set()
    for org in ORGS.values():
        for d in org.domains:
            rows.add((registrable(d), org.name, org.country))
    return sorted(rows)


def org_of_domain(fqdn: str) -> Org | None:
    for org in ORGS.values():
        if fqdn in org.domains:
            return org
    return None


def write_knowledge(directory: str | os.PathLike, registry: list[dict] = (), policies: list[dict] | None = None
                    ) -> Path:
    """Write the world tables plus a registry (and optional policies.json) into ``directory``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)

    def table(name: str, header: list[str], rows) -> None:
        with open(out / name, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)

    table("oui.csv", ["prefix", "vendor"], sorted((v.oui, v.name) for v in VENDORS.values()))
    table("domain_owners.csv", ["suffix", "org", "country"], domain_owner_rows())
    table("geo.csv", ["cidr", "country"], sorted((o.cidr, o.country) for o in ORGS.values()))
    table("cipher_fingerprints.csv", ["fingerprint", "stack_name"],
          sorted(("-".join(f"{s:04x}" for s in v.suites), v.stack) for v in VENDORS.values()))
    table("vendor_normalization.csv", ["raw_vendor_substring", "canonical_vendor"], _VENDOR_NORMALIZATION)
    table("registry.csv", ["mac", "owner", "device_id", "device_class", "authorized"],
          [(r["mac"], r.get("owner", ""), r["device_id"], r.get("device_class", ""),
            "true" if r.get("authorized", True) else "false") for r in sorted(registry, key=lambda r: r["mac"])])
    (out / "ua_rules.json").write_text(json.dumps(_UA_RULES, indent=1) + "\n", encoding="utf-8")
    if policies is not None:
        (out / "policies.json").write_text(json.dumps(policies, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return out
