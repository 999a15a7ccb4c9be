#! /usr/bin/env python3
"""Test suite for green round-robin and session affinity."""
from dataclasses import replace

import pytest

from common import MissingTimestampOption, NotAnInfoPacket, ServerIdOverflow, UnknownSender, UnknownServerId
from packets import build_tcp_packet, encode_info_packet, ip, ParsedPacket, TCP_FLAG_ACK, TCP_FLAG_SYN
from workload import (
    Action,
    handle_info,
    handle_server_in,
    handle_server_out,
    HostEntry,
    HostInfoTable,
    select_server,
    WorkloadState,
)

VIP = ip('10.0.1.100')
SUBNET = ip('10.0.1.0')
CLIENT = ip('192.0.2.10')
SWITCH_MAC = 0x020000000301


def server(number: int) -> HostEntry:
    """Return the Host_info entry of server number, attached to port number + 2."""
    return HostEntry(ip(f'10.0.1.{number + 1}'), 0x020000000400 + number, number + 2)


def workload(servers: int) -> WorkloadState:
    """Build the workload state of an access switch with some servers."""
    table = HostInfoTable()
    for number in range(servers):
        table.add(server(number))
    return WorkloadState(virtual_ip=VIP, subnet_prefix=SUBNET, host_info=table, switch_name='access1')


def request(flags: int, tsecr: int = 0) -> ParsedPacket:
    """Build a client packet addressed to the VIP."""
    return build_tcp_packet(
        eth_src=0x020000000200, eth_dst=SWITCH_MAC, ip_src=CLIENT, ip_dst=VIP,
        src_port=1024, dst_port=80, flags=flags, tsval=5000, tsecr=tsecr,
    )


def reply(number: int, tsval: int = 1000) -> ParsedPacket:
    """Build a reply from server number to the client."""
    entry = server(number)
    return build_tcp_packet(
        eth_src=entry.mac, eth_dst=SWITCH_MAC, ip_src=entry.ip, ip_dst=CLIENT,
        src_port=80, dst_port=1024, flags=TCP_FLAG_ACK, tsval=tsval, tsecr=5000,
    )


def test_host_info_table() -> None:  # pylint: disable=unused-variable
    """Test IDs, lookups and overflow of the Host_info table."""
    table = HostInfoTable()
    ids = [table.add(server(number)) for number in range(8)]

    assert ids == list(range(8))
    assert len(table) == 8  # noqa: PLR2004
    assert table.lookup(3) == server(3)
    assert table.server_id_of(5, ip('10.0.1.4')) == 3  # noqa: PLR2004
    with pytest.raises(ServerIdOverflow):
        table.add(server(8))
    with pytest.raises(UnknownServerId):
        table.lookup(8)
    with pytest.raises(UnknownSender):
        table.server_id_of(2, ip('10.0.1.4'))


def test_handle_info() -> None:  # pylint: disable=unused-variable
    """Test storing availability indices."""
    state = workload(3)
    entry = server(1)

    handle_info(state, encode_info_packet(SUBNET, 200, entry.ip, entry.mac, SWITCH_MAC), entry.port)
    assert state.servers_data == [0, 200, 0]

    handle_info(state, encode_info_packet(SUBNET, 0, entry.ip, entry.mac, SWITCH_MAC), entry.port)
    assert state.servers_data == [0, 0, 0]


def test_handle_info_errors() -> None:  # pylint: disable=unused-variable
    """Test info-packets from unknown senders and non info-packets."""
    state = workload(2)
    with pytest.raises(UnknownSender):
        handle_info(state, encode_info_packet(SUBNET, 10, ip('10.0.1.99'), 1, SWITCH_MAC), 2)
    with pytest.raises(UnknownSender):
        handle_info(state, encode_info_packet(SUBNET, 10, server(0).ip, 1, SWITCH_MAC), server(1).port)
    with pytest.raises(NotAnInfoPacket):
        handle_info(state, reply(0), server(0).port)
    assert state.servers_data == [0, 0]


def test_plain_round_robin() -> None:  # pylint: disable=unused-variable
    """Test round-robin when no server reports green energy."""
    state = workload(4)

    assert [select_server(state) for _ in range(9)] == [0, 1, 2, 3, 0, 1, 2, 3, 0]


def test_green_round_robin() -> None:  # pylint: disable=unused-variable
    """Test round-robin among servers with a positive index."""
    state = workload(4)
    state.servers_data = [0, 5, 0, 3]

    assert [select_server(state) for _ in range(5)] == [1, 3, 1, 3, 1]


def test_cursor_is_shared() -> None:  # pylint: disable=unused-variable
    """Test that green and plain selection share the cursor."""
    state = workload(4)
    state.servers_data = [0, 0, 7, 0]
    assert select_server(state) == 2  # noqa: PLR2004

    state.servers_data = [0, 0, 0, 0]
    assert select_server(state) == 3  # noqa: PLR2004
    assert select_server(state) == 0


@pytest.mark.parametrize('servers', range(2, 9))
def test_round_robin_fairness(servers: int) -> None:  # pylint: disable=unused-variable
    """Test that every server gets the same number of flows."""
    state = workload(servers)
    rounds = 7
    counts = [0] * servers
    for _ in range(rounds * servers):
        counts[select_server(state)] += 1

    assert counts == [rounds] * servers


def test_syn_selects_server() -> None:  # pylint: disable=unused-variable
    """Test that a SYN is translated to the selected server."""
    state = workload(3)
    state.servers_data = [0, 9, 0]

    decision = handle_server_in(state, request(TCP_FLAG_SYN))

    assert decision.action == Action.FORWARD
    assert decision.egress_port == server(1).port
    assert decision.packet is not None
    assert decision.packet.ip_dst == server(1).ip
    assert decision.packet.eth_dst == server(1).mac
    assert decision.selection is not None
    assert decision.selection.server_id == 1
    assert decision.selection.indices == (0, 9, 0)


@pytest.mark.parametrize('number', range(4))
def test_affinity_follows_tsecr(number: int) -> None:  # pylint: disable=unused-variable
    """Test that non-SYN packets go to the server echoed in the timestamp."""
    state = workload(4)

    decision = handle_server_in(state, request(TCP_FLAG_ACK, tsecr=1000 | number))

    assert decision.egress_port == server(number).port
    assert decision.packet is not None
    assert decision.packet.ip_dst == server(number).ip
    assert decision.selection is None
    assert state.next_id == 0


def test_server_in_errors() -> None:  # pylint: disable=unused-variable
    """Test missing timestamps and unknown server IDs."""
    state = workload(4)
    without_timestamp = replace(request(TCP_FLAG_ACK), tcp_options=b'', tcp_ts_offset=None, tcp_tsval=None, tcp_tsecr=None)

    with pytest.raises(MissingTimestampOption):
        handle_server_in(state, without_timestamp)
    with pytest.raises(UnknownServerId):
        handle_server_in(state, request(TCP_FLAG_ACK, tsecr=1007))


def test_handle_server_out() -> None:  # pylint: disable=unused-variable
    """Test stamping the server ID and hiding the server behind the VIP."""
    state = workload(4)

    packet = handle_server_out(state, reply(2, tsval=1000), server(2).port)

    assert packet.tcp_tsval == 1002  # noqa: PLR2004
    assert packet.ip_src == VIP
    assert packet.ip_dst == CLIENT


def test_server_out_errors() -> None:  # pylint: disable=unused-variable
    """Test replies from unknown servers or without timestamp."""
    state = workload(2)
    without_timestamp = replace(reply(0), tcp_options=b'', tcp_ts_offset=None, tcp_tsval=None, tcp_tsecr=None)

    with pytest.raises(UnknownSender):
        handle_server_out(state, reply(0), server(1).port)
    with pytest.raises(MissingTimestampOption):
        handle_server_out(state, without_timestamp, server(0).port)


def test_round_trip_affinity() -> None:  # pylint: disable=unused-variable
    """Test that echoing the stamped tsval reaches the same server."""
    state = workload(5)
    for number in range(5):
        stamped = handle_server_out(state, reply(number, tsval=123456), server(number).port)
        assert stamped.tcp_tsval is not None
        decision = handle_server_in(state, request(TCP_FLAG_ACK, tsecr=stamped.tcp_tsval))
        assert decision.egress_port == server(number).port
