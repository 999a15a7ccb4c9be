"""Ethernet/IPv4/TCP packet codec plus the info-packet and server ID codecs."""
from dataclasses import dataclass, replace
from ipaddress import IPv4Address
import struct
from typing import NamedTuple

from common import (
    IndexOutOfRange,
    MalformedPacket,
    MissingTimestampOption,
    NotAnInfoPacket,
    ServerIdOverflow,
)


ETH_HEADER = struct.Struct('!6s6sH')
IPV4_HEADER = struct.Struct('!BBHHHBBH4s4s')
TCP_HEADER = struct.Struct('!HHIIHHHH')
TIMESTAMP_VALUES = struct.Struct('!II')
PSEUDO_HEADER = struct.Struct('!4s4sBBH')
FIVE_TUPLE = struct.Struct('!IIBHH')

ETH_HEADER_LEN = ETH_HEADER.size
IPV4_MIN_HEADER_LEN = IPV4_HEADER.size
TCP_MIN_HEADER_LEN = TCP_HEADER.size
MIN_PACKET_LEN = ETH_HEADER_LEN + IPV4_MIN_HEADER_LEN

ETHERTYPE_IPV4 = 0x0800
IPV4_VERSION = 4
PROTO_TCP = 6
PROTO_INFO = 0x8F
DEFAULT_TTL = 64
DEFAULT_WINDOW = 65535

TCP_FLAG_FIN = 0x01
TCP_FLAG_SYN = 0x02
TCP_FLAG_ACK = 0x10
TCP_FLAGS_MASK = 0x0FFF

TCPOPT_EOL = 0
TCPOPT_NOP = 1
TCPOPT_TIMESTAMP = 8
TCPOPT_TIMESTAMP_LEN = 10
# NOP, NOP, then the 10 byte timestamp option: the usual Linux layout.
TIMESTAMP_OPTIONS_TEMPLATE = bytes((TCPOPT_NOP, TCPOPT_NOP, TCPOPT_TIMESTAMP, TCPOPT_TIMESTAMP_LEN)) + bytes(8)
TIMESTAMP_OPTIONS_OFFSET = 2

SERVER_ID_BITS = 3
SERVER_ID_MASK = (1 << SERVER_ID_BITS) - 1
MAX_SERVERS = 1 << SERVER_ID_BITS
MAX_INDEX = 0xFF
UINT32_MASK = 0xFFFFFFFF


@dataclass(frozen=True, slots=True)
class ParsedPacket:  # pylint: disable=too-many-instance-attributes
    """Decoded Ethernet II + IPv4 (+ TCP) packet.

    Addresses are plain integers. TCP fields are only meaningful when
    ip_proto is TCP; for any other protocol the bytes after the IPv4 header
    live in payload untouched.

    The timestamp option values are mirrored in tcp_tsval and tcp_tsecr, and
    written back into tcp_options at tcp_ts_offset on serialization, so
    rewriting them is just a dataclasses.replace() call.
    """

    eth_dst: int
    eth_src: int
    ip_src: int
    ip_dst: int
    ip_proto: int
    ip_total_len: int
    ip_checksum: int = 0
    ip_tos: int = 0
    ip_id: int = 0
    ip_flags_frag: int = 0
    ip_ttl: int = DEFAULT_TTL
    ip_options: bytes = b''
    tcp_src_port: int = 0
    tcp_dst_port: int = 0
    tcp_seq: int = 0
    tcp_ack: int = 0
    tcp_flags: int = 0
    tcp_window: int = 0
    tcp_checksum: int = 0
    tcp_urgent: int = 0
    tcp_options: bytes = b''
    tcp_ts_offset: int | None = None
    tcp_tsval: int | None = None
    tcp_tsecr: int | None = None
    payload: bytes = b''
    trailer: bytes = b''
    eth_type: int = ETHERTYPE_IPV4

    @property
    def is_tcp(self) -> bool:
        """Tell if this is a TCP packet."""
        return self.ip_proto == PROTO_TCP

    @property
    def has_timestamp(self) -> bool:
        """Tell if the TCP timestamp option is present."""
        return self.tcp_ts_offset is not None

    @property
    def is_syn(self) -> bool:
        """Tell if the TCP SYN flag is set."""
        return self.is_tcp and bool(self.tcp_flags & TCP_FLAG_SYN)

    @property
    def ip_header_len(self) -> int:
        """IPv4 header length in bytes, options included."""
        return IPV4_MIN_HEADER_LEN + len(self.ip_options)

    @property
    def tcp_header_len(self) -> int:
        """TCP header length in bytes, options included, 0 if not TCP."""
        return TCP_MIN_HEADER_LEN + len(self.tcp_options) if self.is_tcp else 0

    @property
    def payload_len(self) -> int:
        """Payload length in bytes, past the last header."""
        return len(self.payload)

    @property
    def wire_len(self) -> int:
        """Frame length on the wire, Ethernet header included."""
        return ETH_HEADER_LEN + self.ip_total_len


class FiveTuple(NamedTuple):
    """Flow identifier used by ECMP hashing."""  # noqa: D204
    ip_src: int
    ip_dst: int
    ip_proto: int
    src_port: int
    dst_port: int

    def to_bytes(self) -> bytes:
        """Return the 13 octet concatenation src_ip‖dst_ip‖proto‖src_port‖dst_port."""
        return FIVE_TUPLE.pack(*self)


class InfoReport(NamedTuple):
    """Availability report carried by an info-packet."""  # noqa: D204
    sender_key: tuple[int, int]
    availability_index: int


def ip(address: str | int | IPv4Address) -> int:
    """Convert an IPv4 address in any usual form to an integer."""
    return int(IPv4Address(address))


def ip_to_str(address: int) -> str:
    """Convert an integer IPv4 address to dotted quad notation."""
    return str(IPv4Address(address))


def mac(address: str | int) -> int:
    """Convert a colon separated MAC address to an integer."""
    if isinstance(address, int):
        return address
    octets = address.split(':')
    if len(octets) != 6 or not all(len(octet) == 2 for octet in octets):  # noqa: PLR2004
        raise ValueError(address)
    return int(''.join(octets), 16)


def mac_to_str(address: int) -> str:
    """Convert an integer MAC address to colon separated notation."""
    return ':'.join(f'{octet:02x}' for octet in address.to_bytes(6))


def internet_checksum(data: bytes) -> int:
    """Compute the 16 bit ones' complement checksum of data, RFC 1071."""
    if len(data) % 2:
        data += b'\0'
    total = sum(struct.unpack(f'!{len(data) // 2}H', data))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def _find_timestamp(options: bytes) -> int | None:
    """Return the offset of the timestamp option within options, or None.

    Raise MalformedPacket if some option overflows the options area.
    """
    offset = 0
    while offset < len(options):
        kind = options[offset]
        if kind == TCPOPT_EOL:
            break
        if kind == TCPOPT_NOP:
            offset += 1
            continue
        if offset + 1 >= len(options):
            raise MalformedPacket('TCP option without length', offset)
        length = options[offset + 1]
        if length < 2 or offset + length > len(options):  # noqa: PLR2004
            raise MalformedPacket('TCP option overflows the TCP header', offset)
        if kind == TCPOPT_TIMESTAMP:
            if length != TCPOPT_TIMESTAMP_LEN:
                raise MalformedPacket('bad TCP timestamp option length', length)
            return offset
        offset += length
    return None


def parse_packet(data: bytes) -> ParsedPacket:  # noqa: C901
    """Parse an Ethernet II frame carrying IPv4.

    Raise MalformedPacket for truncated headers, bad header lengths and TCP
    options which do not fit the TCP header.
    """
    if len(data) < MIN_PACKET_LEN:
        raise MalformedPacket('truncated packet', len(data))
    eth_dst, eth_src, eth_type = ETH_HEADER.unpack_from(data)
    if eth_type != ETHERTYPE_IPV4:
        raise MalformedPacket('not an IPv4 frame', eth_type)

    (version_ihl, tos, total_len, ip_id, flags_frag, ttl, proto,
     ip_checksum, ip_src, ip_dst) = IPV4_HEADER.unpack_from(data, ETH_HEADER_LEN)
    if version_ihl >> 4 != IPV4_VERSION:
        raise MalformedPacket('not an IPv4 header', version_ihl >> 4)
    ihl = (version_ihl & 0x0F) * 4
    if ihl < IPV4_MIN_HEADER_LEN:
        raise MalformedPacket('bad IHL', ihl)
    if not ihl <= total_len <= len(data) - ETH_HEADER_LEN:
        raise MalformedPacket('bad IPv4 total length', total_len)

    ip_start = ETH_HEADER_LEN
    l4_start = ip_start + ihl
    ip_end = ip_start + total_len
    fields: dict[str, object] = {
        'eth_dst': int.from_bytes(eth_dst),
        'eth_src': int.from_bytes(eth_src),
        'eth_type': eth_type,
        'ip_tos': tos,
        'ip_total_len': total_len,
        'ip_id': ip_id,
        'ip_flags_frag': flags_frag,
        'ip_ttl': ttl,
        'ip_proto': proto,
        'ip_checksum': ip_checksum,
        'ip_src': int.from_bytes(ip_src),
        'ip_dst': int.from_bytes(ip_dst),
        'ip_options': data[ip_start + IPV4_MIN_HEADER_LEN:l4_start],
        'trailer': data[ip_end:],
    }

    if proto != PROTO_TCP:
        return ParsedPacket(**fields, payload=data[l4_start:ip_end])  # type: ignore[arg-type]

    if ip_end - l4_start < TCP_MIN_HEADER_LEN:
        raise MalformedPacket('truncated TCP header', ip_end - l4_start)
    (sport, dport, seq, ack, offset_flags,
     window, tcp_checksum, urgent) = TCP_HEADER.unpack_from(data, l4_start)
    data_offset = (offset_flags >> 12) * 4
    if data_offset < TCP_MIN_HEADER_LEN or l4_start + data_offset > ip_end:
        raise MalformedPacket('bad TCP data offset', data_offset)
    options = data[l4_start + TCP_MIN_HEADER_LEN:l4_start + data_offset]
    ts_offset = _find_timestamp(options)
    tsval = tsecr = None
    if ts_offset is not None:
        tsval, tsecr = TIMESTAMP_VALUES.unpack_from(options, ts_offset + 2)
    return ParsedPacket(
        **fields,  # type: ignore[arg-type]
        tcp_src_port=sport,
        tcp_dst_port=dport,
        tcp_seq=seq,
        tcp_ack=ack,
        tcp_flags=offset_flags & TCP_FLAGS_MASK,
        tcp_window=window,
        tcp_checksum=tcp_checksum,
        tcp_urgent=urgent,
        tcp_options=options,
        tcp_ts_offset=ts_offset,
        tcp_tsval=tsval,
        tcp_tsecr=tsecr,
        payload=data[l4_start + data_offset:ip_end],
    )


def _ip_header(p: ParsedPacket, checksum: int) -> bytes:
    """Pack the IPv4 header of p with the given checksum."""
    return IPV4_HEADER.pack(
        (IPV4_VERSION << 4) | (p.ip_header_len // 4),
        p.ip_tos,
        p.ip_total_len,
        p.ip_id,
        p.ip_flags_frag,
        p.ip_ttl,
        p.ip_proto,
        checksum,
        p.ip_src.to_bytes(4),
        p.ip_dst.to_bytes(4),
    ) + p.ip_options


def _tcp_options(p: ParsedPacket) -> bytes:
    """Return the TCP options of p with the timestamp values written back."""
    if p.tcp_ts_offset is None:
        return p.tcp_options
    options = bytearray(p.tcp_options)
    TIMESTAMP_VALUES.pack_into(options, p.tcp_ts_offset + 2, p.tcp_tsval or 0, p.tcp_tsecr or 0)
    return bytes(options)


def _l4_segment(p: ParsedPacket, checksum: int) -> bytes:
    """Pack whatever follows the IPv4 header, TCP checksum included."""
    if not p.is_tcp:
        return p.payload
    return TCP_HEADER.pack(
        p.tcp_src_port,
        p.tcp_dst_port,
        p.tcp_seq,
        p.tcp_ack,
        (p.tcp_header_len // 4) << 12 | p.tcp_flags,
        p.tcp_window,
        checksum,
        p.tcp_urgent,
    ) + _tcp_options(p) + p.payload


def refresh_checksums(p: ParsedPacket) -> ParsedPacket:
    """Return p with both the IPv4 and the TCP checksums recomputed."""
    ip_checksum = internet_checksum(_ip_header(p, 0))
    tcp_checksum = p.tcp_checksum
    if p.is_tcp:
        segment = _l4_segment(p, 0)
        pseudo = PSEUDO_HEADER.pack(p.ip_src.to_bytes(4), p.ip_dst.to_bytes(4), 0, p.ip_proto, len(segment))
        tcp_checksum = internet_checksum(pseudo + segment)
    return replace(p, ip_checksum=ip_checksum, tcp_checksum=tcp_checksum)


def serialize_packet(p: ParsedPacket) -> bytes:
    """Serialize p to wire octets, recomputing checksums first."""
    p = refresh_checksums(p)
    return (
        ETH_HEADER.pack(p.eth_dst.to_bytes(6), p.eth_src.to_bytes(6), p.eth_type)
        + _ip_header(p, p.ip_checksum)
        + _l4_segment(p, p.tcp_checksum)
        + p.trailer
    )


def build_tcp_packet(  # noqa: PLR0913
    *,
    eth_src: int,
    eth_dst: int,
    ip_src: int,
    ip_dst: int,
    src_port: int,
    dst_port: int,
    flags: int,
    tsval: int,
    tsecr: int,
    payload_len: int = 0,
    seq: int = 0,
    ack: int = 0,
) -> ParsedPacket:
    """Build a TCP packet carrying the timestamp option, checksums included."""
    packet = ParsedPacket(
        eth_dst=eth_dst,
        eth_src=eth_src,
        ip_src=ip_src,
        ip_dst=ip_dst,
        ip_proto=PROTO_TCP,
        ip_total_len=IPV4_MIN_HEADER_LEN + TCP_MIN_HEADER_LEN + len(TIMESTAMP_OPTIONS_TEMPLATE) + payload_len,
        tcp_src_port=src_port,
        tcp_dst_port=dst_port,
        tcp_seq=seq & UINT32_MASK,
        tcp_ack=ack & UINT32_MASK,
        tcp_flags=flags,
        tcp_window=DEFAULT_WINDOW,
        tcp_options=TIMESTAMP_OPTIONS_TEMPLATE,
        tcp_ts_offset=TIMESTAMP_OPTIONS_OFFSET,
        tcp_tsval=tsval & UINT32_MASK,
        tcp_tsecr=tsecr & UINT32_MASK,
        payload=bytes(payload_len),
    )
    return refresh_checksums(packet)


def five_tuple(p: ParsedPacket) -> FiveTuple:
    """Extract the 5-tuple of p; ports are 0 for non-TCP packets."""
    if p.is_tcp:
        return FiveTuple(p.ip_src, p.ip_dst, p.ip_proto, p.tcp_src_port, p.tcp_dst_port)
    return FiveTuple(p.ip_src, p.ip_dst, p.ip_proto, 0, 0)


def encode_info_packet(subnet_prefix: int, index: int, src_ip: int, src_mac: int, dst_mac: int) -> ParsedPacket:
    """Build an info-packet reporting index to the access switch of subnet_prefix.

    Only the first three octets of subnet_prefix are used; the last octet of
    the destination address carries the index. No L4 header, no payload.

    Raise IndexOutOfRange if index does not fit one octet.
    """
    if not 0 <= index <= MAX_INDEX:
        raise IndexOutOfRange('availability index outside 0-255', index)
    packet = ParsedPacket(
        eth_dst=dst_mac,
        eth_src=src_mac,
        ip_src=src_ip,
        ip_dst=(subnet_prefix & 0xFFFFFF00) | index,
        ip_proto=PROTO_INFO,
        ip_total_len=IPV4_MIN_HEADER_LEN,
    )
    return refresh_checksums(packet)


def decode_info_packet(p: ParsedPacket, ingress_port: int) -> InfoReport:
    """Decode the availability report in p, received on ingress_port.

    Raise NotAnInfoPacket if p does not use the info-packet protocol number.
    """
    if p.ip_proto != PROTO_INFO:
        raise NotAnInfoPacket('unexpected IPv4 protocol', p.ip_proto)
    return InfoReport((ingress_port, p.ip_src), p.ip_dst & MAX_INDEX)


def encode_server_id_tsval(tsval: int, server_id: int) -> int:
    """Store server_id in the three low bits of tsval.

    Raise ServerIdOverflow if server_id does not fit three bits.
    """
    if not 0 <= server_id < MAX_SERVERS:
        raise ServerIdOverflow('server ID does not fit 3 bits', server_id)
    return (tsval & UINT32_MASK & ~SERVER_ID_MASK) | server_id


def decode_server_id_tsecr(tsecr: int | None) -> int:
    """Return the server ID echoed in the three low bits of tsecr.

    Raise MissingTimestampOption if there is no timestamp (tsecr is None).
    """
    if tsecr is None:
        raise MissingTimestampOption('TCP timestamp option needed for session affinity')
    return tsecr & SERVER_ID_MASK
