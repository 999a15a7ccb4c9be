"""Green round-robin server selection with timestamp based session affinity."""
from dataclasses import dataclass, field, replace
from enum import StrEnum
from typing import NamedTuple

from common import logger, Messages, MissingTimestampOption, ServerIdOverflow, UnknownSender, UnknownServerId
from packets import (
    decode_info_packet,
    decode_server_id_tsecr,
    encode_server_id_tsval,
    MAX_SERVERS,
    ParsedPacket,
    refresh_checksums,
)


class Action(StrEnum):
    """What the ingress pipeline does with a packet."""  # noqa: D204
    FORWARD = 'forward'
    DROP = 'drop'
    CONSUME = 'consume'


class Selection(NamedTuple):
    """Server chosen for a new flow and the indices it was chosen from."""  # noqa: D204
    server_id: int
    indices: tuple[int, ...]


class ForwardingDecision(NamedTuple):
    """Outcome of the ingress pipeline for one packet."""  # noqa: D204
    action: Action
    egress_port: int | None = None
    packet: ParsedPacket | None = None
    selection: Selection | None = None
    cause: str = ''


class HostEntry(NamedTuple):
    """Host_info row: where a local server lives."""  # noqa: D204
    ip: int
    mac: int
    port: int


@dataclass(slots=True)
class HostInfoTable:
    """Host_info table, server ID to host entry, plus the reverse map."""

    entries: list[HostEntry] = field(default_factory=list)
    reverse: dict[tuple[int, int], int] = field(default_factory=dict)

    def add(self, entry: HostEntry) -> int:
        """Add entry with the next free server ID, which is returned.

        Raise ServerIdOverflow if the table is full.
        """
        server_id = len(self.entries)
        if server_id >= MAX_SERVERS:
            raise ServerIdOverflow('Host_info table full', server_id)
        self.entries.append(entry)
        self.reverse[(entry.port, entry.ip)] = server_id
        return server_id

    def lookup(self, server_id: int) -> HostEntry:
        """Return the entry for server_id, raise UnknownServerId if none."""
        if not 0 <= server_id < len(self.entries):
            raise UnknownServerId('no Host_info entry for server ID', server_id)
        return self.entries[server_id]

    def server_id_of(self, port: int, address: int) -> int:
        """Return the server ID of address behind port, raise UnknownSender if none."""
        try:
            return self.reverse[(port, address)]
        except KeyError as exc:
            raise UnknownSender('no Host_info entry for sender', (port, address)) from exc

    def __len__(self) -> int:
        """Return the number of servers in the table."""
        return len(self.entries)


@dataclass(slots=True)
class WorkloadState:
    """Workload control registers and tables of one access switch."""

    virtual_ip: int
    subnet_prefix: int
    host_info: HostInfoTable
    servers_data: list[int] = field(default_factory=list)
    next_id: int = 0
    switch_name: str = ''

    def __post_init__(self) -> None:
        """Size servers_data after the Host_info table, all zeros."""
        if not self.servers_data:
            self.servers_data = [0] * len(self.host_info)


def handle_info(state: WorkloadState, p: ParsedPacket, ingress_port: int) -> None:
    """Store the availability index reported by an info-packet.

    Raise UnknownSender if the sender has no Host_info entry.
    """
    report = decode_info_packet(p, ingress_port)
    server_id = state.host_info.server_id_of(*report.sender_key)
    if state.servers_data[server_id] != report.availability_index:
        logger.debug(Messages.INFO_REPORT.format(state.switch_name, server_id, report.availability_index))
    state.servers_data[server_id] = report.availability_index


def select_server(state: WorkloadState) -> int:
    """Pick the server for a new flow.

    Plain round-robin when every index is zero, otherwise round-robin among
    the servers with a non-zero index. Both share the same cursor.
    """
    n = len(state.servers_data)
    chosen = state.next_id
    if any(state.servers_data):
        for step in range(n):
            candidate = (state.next_id + step) % n
            if state.servers_data[candidate] > 0:
                chosen = candidate
                break
    state.next_id = (chosen + 1) % n
    return chosen


def handle_server_in(state: WorkloadState, p: ParsedPacket) -> ForwardingDecision:
    """Translate a VIP addressed packet to its server.

    SYN packets get a server from select_server(); everything else goes to
    the server whose ID is echoed back in the timestamp.

    Raise MissingTimestampOption for non-SYN packets without timestamp and
    UnknownServerId when the echoed ID is not in the Host_info table.
    """
    selection = None
    if p.is_syn:
        indices = tuple(state.servers_data)
        server_id = select_server(state)
        selection = Selection(server_id, indices)
    else:
        server_id = decode_server_id_tsecr(p.tcp_tsecr)
    entry = state.host_info.lookup(server_id)
    packet = refresh_checksums(replace(p, ip_dst=entry.ip, eth_dst=entry.mac))
    return ForwardingDecision(Action.FORWARD, entry.port, packet, selection)


def handle_server_out(state: WorkloadState, p: ParsedPacket, ingress_port: int) -> ParsedPacket:
    """Stamp the server ID in the timestamp of a server reply and hide the server behind the VIP.

    Raise UnknownSender for unknown servers and MissingTimestampOption for
    replies without timestamp.
    """
    server_id = state.host_info.server_id_of(ingress_port, p.ip_src)
    if not p.has_timestamp or p.tcp_tsval is None:
        raise MissingTimestampOption('server reply without TCP timestamp', server_id)
    tsval = encode_server_id_tsval(p.tcp_tsval, server_id)
    return refresh_checksums(replace(p, tcp_tsval=tsval, ip_src=state.virtual_ip))
