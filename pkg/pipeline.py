"""Per-switch ingress pipeline: classification, LPM, ECMP and dispatch."""
from dataclasses import dataclass, field, replace
from enum import StrEnum
from typing import NamedTuple
from zlib import crc32

from common import logger, Messages, NoRoute, PacketError, PipelineError, WidthOutOfRange
from consolidation import ConsolidationState
from packets import five_tuple, FiveTuple, ParsedPacket, PROTO_INFO, refresh_checksums
from workload import (
    Action,
    ForwardingDecision,
    handle_info,
    handle_server_in,
    handle_server_out,
    WorkloadState,
)


class SwitchType(StrEnum):
    """Switch roles in a three tier fabric."""  # noqa: D204
    CORE = 'core'
    AGGREGATION = 'aggregation'
    ACCESS = 'access'


class PacketClass(StrEnum):
    """Packet classes, by switch type and direction."""  # noqa: D204
    AGGREGATION_IN = 'Aggregation_in'
    SERVER_IN = 'Server_in'
    SERVER_OUT = 'Server_out'
    INFO = 'Info'
    TRANSIT = 'Transit'


@dataclass(frozen=True, slots=True)
class SwitchConfig:  # pylint: disable=too-many-instance-attributes
    """Static configuration of one switch."""

    switch_id: str
    switch_type: SwitchType
    mac: int
    uplink_ports: tuple[int, ...] = ()
    server_ports: frozenset[int] = frozenset()
    external_port: int | None = None
    subnet_prefix: int | None = None
    virtual_ip: int | None = None


class Route(NamedTuple):
    """LPM table action: egress port and the MAC of the next hop."""  # noqa: D204
    port: int
    next_hop_mac: int


class LpmTable:
    """Longest prefix match table with one exact match dict per prefix length."""

    def __init__(self) -> None:
        """Create an empty table."""
        self._by_length: dict[int, dict[int, Route]] = {}

    def add(self, prefix: int, length: int, route: Route) -> None:
        """Install route for prefix/length, replacing any previous entry."""
        mask = _netmask(length)
        self._by_length.setdefault(length, {})[prefix & mask] = route

    def entries(self) -> list[tuple[int, int, Route]]:
        """Return all entries as (prefix, length, route), longest prefixes first."""
        return [
            (prefix, length, route)
            for length in sorted(self._by_length, reverse=True)
            for prefix, route in sorted(self._by_length[length].items())
        ]

    def __len__(self) -> int:
        """Return the number of entries."""
        return sum(len(routes) for routes in self._by_length.values())

    def lookup(self, address: int) -> Route | None:
        """Return the route of the longest prefix matching address, None on a miss."""
        for length in sorted(self._by_length, reverse=True):
            if (route := self._by_length[length].get(address & _netmask(length))) is not None:
                return route
        return None


def _netmask(length: int) -> int:
    """Return the 32 bit netmask for a prefix length."""
    return (0xFFFFFFFF << (32 - length)) & 0xFFFFFFFF


@dataclass(slots=True)
class SwitchState:
    """Everything one switch holds: configuration, tables and registers."""

    config: SwitchConfig
    lpm: LpmTable
    neighbor_macs: dict[int, int] = field(default_factory=dict)
    consolidation: ConsolidationState | None = None
    workload: WorkloadState | None = None


def lpm_lookup(table: LpmTable, address: int) -> Route | None:
    """Look address up in table, returning None on a miss."""
    return table.lookup(address)


def ecmp_select(ft: FiveTuple, width: int, uplinks: tuple[int, ...]) -> int:
    """Pick one of the first width uplinks by CRC-32 of the 5-tuple.

    Raise WidthOutOfRange if width is not within 1 and len(uplinks).
    """
    if not 1 <= width <= len(uplinks):
        raise WidthOutOfRange('ECMP width outside the uplink range', (width, len(uplinks)))
    return uplinks[crc32(ft.to_bytes()) % width]


def classify(p: ParsedPacket, cfg: SwitchConfig, ingress_port: int) -> PacketClass:
    """Classify p as seen by the switch configured by cfg on ingress_port."""
    match cfg.switch_type:
        case SwitchType.ACCESS:
            if p.ip_proto == PROTO_INFO:
                return PacketClass.INFO
            if p.ip_dst == cfg.virtual_ip:
                return PacketClass.SERVER_IN
            if ingress_port in cfg.server_ports:
                return PacketClass.SERVER_OUT
        case SwitchType.CORE:
            if ingress_port == cfg.external_port:
                return PacketClass.AGGREGATION_IN
    return PacketClass.TRANSIT


def _lpm_forward(state: SwitchState, p: ParsedPacket) -> ForwardingDecision:
    """Forward p by LPM, rewriting MAC addresses only."""
    route = lpm_lookup(state.lpm, p.ip_dst)
    if route is None:
        raise NoRoute('LPM miss', p.ip_dst)
    packet = replace(p, eth_src=state.config.mac, eth_dst=route.next_hop_mac)
    return ForwardingDecision(Action.FORWARD, route.port, refresh_checksums(packet))


def _uplink_forward(state: SwitchState, p: ParsedPacket, now: float) -> ForwardingDecision:
    """Account p for consolidation and send it up through ECMP."""
    if state.consolidation is None:
        return _lpm_forward(state, p)
    width = state.consolidation.account(p.wire_len, now)
    port = ecmp_select(five_tuple(p), width, state.config.uplink_ports)
    packet = replace(p, eth_src=state.config.mac, eth_dst=state.neighbor_macs[port])
    return ForwardingDecision(Action.FORWARD, port, refresh_checksums(packet))


def _is_local(state: SwitchState, p: ParsedPacket) -> bool:
    """Tell if p is headed to a server attached to this very switch."""
    route = lpm_lookup(state.lpm, p.ip_dst)
    return route is not None and route.port in state.config.server_ports


def ingress(state: SwitchState, p: ParsedPacket, ingress_port: int, now: float) -> ForwardingDecision:
    """Run p through the ingress pipeline of the switch.

    Packet and pipeline errors become drops whose cause is the exception
    class name. ClockRegression is not caught.
    """
    packet_class = classify(p, state.config, ingress_port)
    try:
        match packet_class:
            case PacketClass.INFO if state.workload is not None:
                handle_info(state.workload, p, ingress_port)
                return ForwardingDecision(Action.CONSUME)
            case PacketClass.SERVER_IN if state.workload is not None:
                return handle_server_in(state.workload, p)
            case PacketClass.SERVER_OUT if state.workload is not None:
                if not p.is_tcp or _is_local(state, p):
                    return _lpm_forward(state, p)
                return _uplink_forward(state, handle_server_out(state.workload, p, ingress_port), now)
            case PacketClass.AGGREGATION_IN:
                return _uplink_forward(state, p, now)
            case _:
                return _lpm_forward(state, p)
    except (PacketError, PipelineError) as exc:
        cause = type(exc).__name__
        logger.debug(Messages.PACKET_DROPPED.format(now, state.config.switch_id, cause, p.wire_len))
        return ForwardingDecision(Action.DROP, packet=p, cause=cause)
