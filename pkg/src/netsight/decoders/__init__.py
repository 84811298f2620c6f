"""Protocol decoders: link/network/transport headers, flows, DNS, DHCP, HTTP, TLS."""

from .dhcp import decode_dhcp
from .dispatch import DecodedPacket, PacketDecoder, decode_capture
from .dns import decode_dns
from .flows import DEFAULT_IDLE_TIMEOUT, FlowAssembler, assemble_flows, flow_key
from .http import decode_http
from .layers import decode_ethernet, decode_ipv4, decode_layers, decode_packet, decode_transport, is_group_mac
from .tls import certificate_common_names, decode_tls
from .types import (
    DecodeStats,
    DhcpEvent,
    DhcpMessageType,
    DnsEvent,
    EthernetFrame,
    FlowKey,
    FlowRecord,
    HttpEvent,
    Ipv4Datagram,
    ProtocolEvent,
    Skip,
    TlsEvent,
    TlsStage,
    Transport,
    TransportSegment,
)

__all__ = [name for name in dir() if not name.startswith("_")]
