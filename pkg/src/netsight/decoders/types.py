"""Decoded packet layers, flows, and application protocol events."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple


@dataclass(frozen=True, slots=True)
class Skip:
    """A packet or payload that a decoder declined, with a countable reason."""

    reason: str
    detail: str = ""


class Transport(str, Enum):
    TCP = "TCP"
    UDP = "UDP"


@dataclass(frozen=True, slots=True)
class EthernetFrame:
    src_mac: str
    dst_mac: str
    ethertype: int
    payload: bytes
    ts: float


@dataclass(frozen=True, slots=True)
class Ipv4Datagram:
    src_ip: str
    dst_ip: str
    protocol: int
    header_len: int
    total_len: int
    payload: bytes
    truncated: bool = False
    ts: float = 0.0
    src_mac: str = ""
    dst_mac: str = ""


@dataclass(frozen=True, slots=True)
class TransportSegment:
    src_port: int
    dst_port: int
    kind: Transport
    payload: bytes
    tcp_flags: int | None = None
    tcp_seq: int | None = None
    ts: float = 0.0
    src_ip: str = ""
    dst_ip: str = ""
    src_mac: str = ""
    dst_mac: str = ""


class FlowKey(NamedTuple):
    ip_a: str
    port_a: int
    ip_b: str
    port_b: int
    kind: Transport


@dataclass(slots=True)
class FlowRecord:
    key: FlowKey
    originator: tuple[str, int]
    first_ts: float
    last_ts: float
    pkts_orig: int = 0
    pkts_resp: int = 0
    bytes_orig: int = 0
    bytes_resp: int = 0
    orig_mac: str = ""
    resp_mac: str = ""

    @property
    def responder(self) -> tuple[str, int]:
        a = (self.key.ip_a, self.key.port_a)
        return (self.key.ip_b, self.key.port_b) if a == self.originator else a

    @property
    def orig_is_first(self) -> bool:
        return self.originator == (self.key.ip_a, self.key.port_a)

    @property
    def total_bytes(self) -> int:
        return self.bytes_orig + self.bytes_resp


@dataclass(frozen=True, slots=True, kw_only=True)
class ProtocolEvent:
    ts: float
    src_ip: str
    dst_ip: str
    src_mac: str
    dst_mac: str = ""
    src_port: int = 0
    dst_port: int = 0


@dataclass(frozen=True, slots=True, kw_only=True)
class DnsEvent(ProtocolEvent):
    query_name: str
    qtype: int
    is_response: bool
    answers: tuple[tuple[str, str], ...] = ()


class DhcpMessageType(str, Enum):
    DISCOVER = "Discover"
    OFFER = "Offer"
    REQUEST = "Request"
    ACK = "Ack"
    RELEASE = "Release"


@dataclass(frozen=True, slots=True, kw_only=True)
class DhcpEvent(ProtocolEvent):
    msg_type: DhcpMessageType
    client_mac: str
    assigned_ip: str | None = None
    hostname: str | None = None
    vendor_class: str | None = None
    param_req_list: tuple[int, ...] | None = None


@dataclass(frozen=True, slots=True, kw_only=True)
class HttpEvent(ProtocolEvent):
    method: str
    uri: str
    host: str | None = None
    user_agent: str | None = None


class TlsStage(str, Enum):
    CLIENT_HELLO = "ClientHello"
    CERTIFICATE = "Certificate"


@dataclass(frozen=True, slots=True, kw_only=True)
class TlsEvent(ProtocolEvent):
    stage: TlsStage
    sni: str | None = None
    cipher_suites: tuple[int, ...] | None = None
    issuer_cn: str | None = None
    subject_cn: str | None = None


@dataclass
class DecodeStats:
    packets_in: int = 0
    decoded: int = 0
    skipped: dict[str, int] = field(default_factory=dict)
    app_events: dict[str, int] = field(default_factory=dict)
    app_skips: dict[str, int] = field(default_factory=dict)
    flows: int = 0

    def skip(self, reason: str) -> None:
        self.skipped[reason] = self.skipped.get(reason, 0) + 1

    def app_skip(self, proto: str, reason: str) -> None:
        key = f"{proto}:{reason}"
        self.app_skips[key] = self.app_skips.get(key, 0) + 1

    def app_event(self, proto: str) -> None:
        self.app_events[proto] = self.app_events.get(proto, 0) + 1

    @property
    def skipped_total(self) -> int:
        return sum(self.skipped.values())

    @property
    def malformed(self) -> int:
        return sum(n for k, n in self.app_skips.items() if k.endswith(":Malformed"))

    def as_dict(self) -> dict:
        return {
            "packets_in": self.packets_in,
            "decoded": self.decoded,
            "skipped": dict(sorted(self.skipped.items())),
            "app_events": dict(sorted(self.app_events.items())),
            "app_skips": dict(sorted(self.app_skips.items())),
            "flows": self.flows,
        }
