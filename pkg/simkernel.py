"""Deterministic discrete-event engine running a scenario over the switch pipelines."""
from dataclasses import dataclass, field
from enum import StrEnum
from itertools import count
import math
from typing import NamedTuple

import numpy as np
import simpy

from common import logger, Messages
from control import (
    ControlPlaneAudit,
    install,
    NodeSpec,
    NodeType,
    Policy,
    Scenario,
    server_names,
    StepProfile,
    TrafficProfile,
)
from harness import FlowRecord, MetricsReport
from packets import (
    build_tcp_packet,
    encode_info_packet,
    ip_to_str,
    MAX_INDEX,
    ParsedPacket,
    PROTO_INFO,
    TCP_FLAG_ACK,
    TCP_FLAG_SYN,
    UINT32_MASK,
)
from pipeline import ingress, SwitchState
from workload import Action


HOURS_PER_DAY = 24.0
HOUR_EPSILON = 1e-9
MS_PER_SECOND = 1000
SERVICE_PORT = 80
EPHEMERAL_PORT_BASE = 1024
EPHEMERAL_PORT_COUNT = 65536 - EPHEMERAL_PORT_BASE
HOST_PORT = 1
ARRIVAL_TAG = 'arrival'
REPORT_TAG = 'report'
SEND_TAG = 'send'


class EventKind(StrEnum):
    """Things that can happen in the simulation."""  # noqa: D204
    PACKET_SEND = 'packet_send'
    PACKET_ARRIVAL = 'packet_arrival'
    HOST_TIMER = 'host_timer'


class Event(NamedTuple):
    """Timestamped occurrence; (time, seq) orders all events totally."""  # noqa: D204
    time: float
    seq: int
    kind: EventKind
    node: str
    port: int = HOST_PORT
    packet: ParsedPacket | None = None
    tag: str = ''
    flow: int = 0


def send(node: str, packet: ParsedPacket, now: float) -> Event:
    """Return the event of node putting packet on its only link at now."""
    return Event(now, 0, EventKind.PACKET_SEND, node, HOST_PORT, packet)


def timer(node: str, when: float, tag: str, flow: int = 0) -> Event:
    """Return a host timer event for node firing at when."""
    return Event(when, 0, EventKind.HOST_TIMER, node, tag=tag, flow=flow)


class _Clock:
    """Millisecond TCP timestamp clock which never repeats a value."""  # noqa: D204
    def __init__(self) -> None:
        """Start before time zero."""
        self.last = -1

    def tick(self, now: float) -> int:
        """Return a fresh tsval for time now."""
        self.last = max(int(now * MS_PER_SECOND), self.last + 1)
        return self.last & UINT32_MASK


@dataclass(slots=True)
class ServerAgent:  # pylint: disable=too-many-instance-attributes
    """A server: answers requests and reports its availability index."""

    name: str
    ip: int
    mac: int
    gateway_mac: int
    subnet_prefix: int
    trace: StepProfile
    timezone_offset: float
    report_period: float
    seconds_per_hour: float
    response_payload: int
    until: float
    clock: _Clock = field(default_factory=_Clock)
    last_index: int | None = None
    next_report: float = 0.0

    def local_hour(self, now: float) -> float:
        """Return the hour of the day at the server site."""
        return (now / self.seconds_per_hour - self.timezone_offset + HOUR_EPSILON) % HOURS_PER_DAY

    def index_at(self, now: float) -> int:
        """Return the availability index at now."""
        return min(MAX_INDEX, int(self.trace.value_at(self.local_hour(now))))

    def step(self, now: float) -> list[Event]:
        """Report the index if it changed or the report period elapsed, then sleep until next time."""
        events = []
        index = self.index_at(now)
        if index != self.last_index or (self.report_period and now >= self.next_report):
            packet = encode_info_packet(self.subnet_prefix, index, self.ip, self.mac, self.gateway_mac)
            events.append(send(self.name, packet, now))
            self.last_index = index
            self.next_report = now + self.report_period
        wakeups = []
        if (hours := self.trace.hours_to_next_change(self.local_hour(now))) is not None:
            wakeups.append(now + (hours + HOUR_EPSILON) * self.seconds_per_hour)
        if self.report_period:
            wakeups.append(self.next_report)
        if wakeups and (wakeup := min(wakeups)) < self.until:
            events.append(timer(self.name, wakeup, REPORT_TAG))
        return events

    def receive(self, packet: ParsedPacket, now: float) -> list[Event]:
        """Answer a request with one response packet."""
        if not packet.is_tcp or now >= self.until:
            return []
        response = build_tcp_packet(
            eth_src=self.mac,
            eth_dst=self.gateway_mac,
            ip_src=self.ip,
            ip_dst=packet.ip_src,
            src_port=packet.tcp_dst_port,
            dst_port=packet.tcp_src_port,
            flags=TCP_FLAG_SYN | TCP_FLAG_ACK if packet.is_syn else TCP_FLAG_ACK,
            tsval=self.clock.tick(now),
            tsecr=packet.tcp_tsval or 0,
            payload_len=self.response_payload,
            ack=packet.tcp_seq + max(1, packet.payload_len),
        )
        return [send(self.name, response, now)]


@dataclass(slots=True)
class FlowState:
    """Client side state of one flow."""

    flow_id: int
    port: int
    vip: int
    remaining: int
    echo: int = 0
    seq: int = 0


@dataclass(slots=True)
class ClientGenerator:  # pylint: disable=too-many-instance-attributes
    """External client opening flows towards the VIPs at the profile rate."""

    name: str
    ip: int
    mac: int
    gateway_mac: int
    profile: TrafficProfile
    seconds_per_hour: float
    until: float
    rng: np.random.Generator
    clock: _Clock = field(default_factory=_Clock)
    flows: dict[int, FlowState] = field(default_factory=dict)
    next_flow_id: int = 0
    vip_violations: int = 0

    def next_arrival(self, now: float) -> float | None:
        """Draw the next flow arrival after now, None if there is none before until.

        Arrivals are Poisson with a rate which is constant between profile
        samples; a draw crossing a sample boundary restarts at the boundary.
        """
        time = now
        while time < self.until:
            hour = (time / self.seconds_per_hour + HOUR_EPSILON) % HOURS_PER_DAY
            rate = self.profile.rates.value_at(hour)
            hours = self.profile.rates.hours_to_next_change(hour)
            boundary = math.inf if hours is None else time + (hours + HOUR_EPSILON) * self.seconds_per_hour
            if rate > 0:
                arrival = time + float(self.rng.exponential(1 / rate))
                if arrival < boundary:
                    return arrival if arrival < self.until else None
            if math.isinf(boundary):
                return None
            time = boundary
        return None

    def start(self) -> list[Event]:
        """Schedule the first arrival."""
        first = self.next_arrival(0.0)
        return [] if first is None else [timer(self.name, first, ARRIVAL_TAG)]

    def step(self, now: float) -> list[Event]:
        """Open a new flow with a SYN and schedule the next arrival."""
        flow_id = self.next_flow_id
        self.next_flow_id += 1
        targets = self.profile.targets
        vip = targets[int(self.rng.integers(len(targets)))] if len(targets) > 1 else targets[0]
        low, high = self.profile.request_packets
        flow = FlowState(
            flow_id=flow_id,
            port=EPHEMERAL_PORT_BASE + flow_id % EPHEMERAL_PORT_COUNT,
            vip=vip,
            remaining=int(self.rng.integers(low, high + 1)),
            seq=int(self.rng.integers(UINT32_MASK + 1)),
        )
        self.flows[flow.port] = flow
        events = [send(self.name, self._packet(flow, TCP_FLAG_SYN, 0, now), now)]
        if (arrival := self.next_arrival(now)) is not None:
            events.append(timer(self.name, arrival, ARRIVAL_TAG))
        return events

    def _packet(self, flow: FlowState, flags: int, payload_len: int, now: float) -> ParsedPacket:
        packet = build_tcp_packet(
            eth_src=self.mac,
            eth_dst=self.gateway_mac,
            ip_src=self.ip,
            ip_dst=flow.vip,
            src_port=flow.port,
            dst_port=SERVICE_PORT,
            flags=flags,
            tsval=self.clock.tick(now),
            tsecr=flow.echo,
            payload_len=payload_len,
            seq=flow.seq,
        )
        flow.seq = (flow.seq + max(1, payload_len)) & UINT32_MASK
        return packet

    def send_next(self, port: int, now: float) -> list[Event]:
        """Send the next request packet of the flow bound to port."""
        flow = self.flows.get(port)
        if flow is None or now >= self.until:
            self.flows.pop(port, None)
            return []
        flow.remaining -= 1
        return [send(self.name, self._packet(flow, TCP_FLAG_ACK, self.profile.request_payload, now), now)]

    def receive(self, packet: ParsedPacket, now: float) -> list[Event]:
        """Take a response, echo its timestamp, and go on with the flow after thinking."""
        flow = self.flows.get(packet.tcp_dst_port) if packet.is_tcp else None
        if flow is None:
            return []
        if packet.ip_src != flow.vip:
            self.vip_violations += 1
        flow.echo = packet.tcp_tsval or 0
        if flow.remaining <= 0 or now >= self.until:
            del self.flows[flow.port]
            return []
        think = float(self.rng.exponential(self.profile.think_time)) if self.profile.think_time > 0 else 0.0
        if not think:
            return self.send_next(flow.port, now)
        return [timer(self.name, now + think, SEND_TAG, flow.port)]


class Engine:
    """simpy driven event loop connecting hosts and switches through links."""

    def __init__(self, scenario: Scenario, states: dict[str, SwitchState], until: float, seed: int, policy: Policy) -> None:
        """Prepare the run of scenario over the already installed switch states."""
        self.env = simpy.Environment()
        self.sequence = count()
        self.scenario = scenario
        self.switches = states
        self.until = until
        self.names = server_names(scenario)
        self.links: dict[tuple[str, int], tuple[str, int]] = {}
        for node, port, peer, peer_port in scenario.links():
            self.links[(node, port)] = (peer, peer_port)
            self.links[(peer, peer_port)] = (node, port)
        self.report = MetricsReport(
            scenario=scenario.name,
            seed=seed,
            policy=policy,
            window=scenario.window,
            day_length=scenario.day_length,
            duration=until,
            intervals=scenario.report.intervals,
            switches=scenario.report.switches,
            switch_power=scenario.report.switch_power,
            switch_types={node.name: str(node.node_type) for node in scenario.switches()},
        )
        self.flow_index: dict[tuple[int, int], FlowRecord] = {}
        self.servers: dict[str, ServerAgent] = {}
        self.client: ClientGenerator | None = None
        for node in scenario.hosts():
            gateway = scenario.nodes[node.ports[0]]
            if node.node_type == NodeType.SERVER:
                self.servers[node.name] = self._server(node, gateway)
            elif scenario.traffic is not None and node.name == scenario.traffic.client:
                self.client = ClientGenerator(
                    name=node.name,
                    ip=node.ip or 0,
                    mac=node.mac,
                    gateway_mac=gateway.mac,
                    profile=scenario.traffic,
                    seconds_per_hour=scenario.seconds_per_hour,
                    until=until,
                    rng=np.random.default_rng(seed),
                )

    def _server(self, node: NodeSpec, gateway: NodeSpec) -> ServerAgent:
        traffic = self.scenario.traffic
        return ServerAgent(
            name=node.name,
            ip=node.ip or 0,
            mac=node.mac,
            gateway_mac=gateway.mac,
            subnet_prefix=gateway.subnet or 0,
            trace=node.trace,
            timezone_offset=node.timezone_offset,
            report_period=node.report_period,
            seconds_per_hour=self.scenario.seconds_per_hour,
            response_payload=traffic.response_payload if traffic else 0,
            until=self.until,
        )

    def schedule(self, event: Event) -> None:
        """Queue event; equal times keep insertion order."""
        event = event._replace(seq=next(self.sequence))
        timeout = self.env.timeout(max(0.0, event.time - self.env.now), value=event)
        timeout.callbacks.append(self._dispatch)

    def _transmit(self, node: str, port: int, packet: ParsedPacket) -> None:
        peer, peer_port = self.links[(node, port)]
        now = self.env.now
        self.schedule(Event(now + self.scenario.link_delay, 0, EventKind.PACKET_ARRIVAL, peer, peer_port, packet))

    def _emit(self, events: list[Event]) -> None:
        for event in events:
            if event.kind != EventKind.PACKET_SEND or event.packet is None:
                self.schedule(event)
                continue
            packet = event.packet
            self.report.record_injected(packet.wire_len)
            if packet.ip_proto == PROTO_INFO:
                self.report.indices.append((event.time, event.node, packet.ip_dst & MAX_INDEX))
            elif self.client is not None and event.node == self.client.name:
                self._track_client_packet(packet, event.time, self.client.next_flow_id - 1)
            self._transmit(event.node, event.port, packet)

    def _track_client_packet(self, packet: ParsedPacket, now: float, flow_id: int) -> None:
        key = (packet.ip_src, packet.tcp_src_port)
        if packet.is_syn:
            record = FlowRecord(flow_id, now, packet.tcp_src_port, ip_to_str(packet.ip_dst))
            self.report.flows.append(record)
            self.flow_index[key] = record
        if (record := self.flow_index.get(key)) is not None:
            record.bytes += packet.wire_len
            record.packets += 1

    def audit_affinity(self, server: str, packet: ParsedPacket) -> bool:
        """Check that a TCP packet reaching server belongs to a flow dispatched to that very server.

        Packets of unknown flows and of flows dispatched elsewhere count as
        affinity violations.
        """
        if not packet.is_tcp:
            return True
        record = self.flow_index.get((packet.ip_src, packet.tcp_src_port))
        if record is None or record.server != server:
            self.report.affinity_violations += 1
            return False
        return True

    def _dispatch(self, simpy_event: simpy.events.Event) -> None:
        event: Event = simpy_event.value
        self.report.events += 1
        now = self.env.now
        if event.kind == EventKind.HOST_TIMER:
            self._emit(self._fire_timer(event, now))
        elif event.node in self.switches and event.packet is not None:
            self._switch_arrival(self.switches[event.node], event.packet, event.port, now)
        elif event.packet is not None:
            self.report.record_delivered(event.packet.wire_len)
            if event.node in self.servers:
                self.report.record_server_packet(event.node, now, event.packet.wire_len, new_flow=event.packet.is_syn)
                self.audit_affinity(event.node, event.packet)
                self._emit(self.servers[event.node].receive(event.packet, now))
            elif self.client is not None and event.node == self.client.name:
                self._emit(self.client.receive(event.packet, now))

    def _fire_timer(self, event: Event, now: float) -> list[Event]:
        if event.node in self.servers:
            return self.servers[event.node].step(now)
        if self.client is None:
            return []
        if event.tag == SEND_TAG:
            return self.client.send_next(event.flow, now)
        return self.client.step(now)

    def _switch_arrival(self, state: SwitchState, packet: ParsedPacket, port: int, now: float) -> None:
        decision = ingress(state, packet, port, now)
        match decision.action:
            case Action.FORWARD if decision.packet is not None and decision.egress_port is not None:
                self.report.record_forward(state.config.switch_id, now, decision.packet.wire_len)
                if decision.selection is not None:
                    record = self.flow_index.get((packet.ip_src, packet.tcp_src_port))
                    if record is not None:
                        record.access = state.config.switch_id
                        record.server_id = decision.selection.server_id
                        record.server = self.names[(state.config.switch_id, decision.selection.server_id)]
                        record.indices = decision.selection.indices
                self._transmit(state.config.switch_id, decision.egress_port, decision.packet)
            case Action.CONSUME:
                self.report.record_delivered(packet.wire_len)
            case _:
                self.report.record_drop(decision.cause or 'Unknown', packet.wire_len)

    def run(self) -> MetricsReport:
        """Run until every host stops injecting and the fabric is drained."""
        for name in self.servers:
            self.schedule(timer(name, 0.0, REPORT_TAG))
        if self.client is not None:
            self._emit(self.client.start())
        self.env.run()
        for state in self.switches.values():
            if state.consolidation is not None:
                self.report.width_log.extend(
                    (change.time, state.config.switch_id, change.traffic, change.before, change.after)
                    for change in state.consolidation.width_log
                )
        self.report.width_log.sort()
        self.report.vip_violations = self.client.vip_violations if self.client is not None else 0
        return self.report


def run(scenario: Scenario, until: float | None = None, seed: int | None = None, policy: Policy = Policy.CONSOLIDATING) -> MetricsReport:
    """Simulate scenario and return its metrics.

    The switches are installed once, before time zero; the run phase never
    calls the control plane again, and the report says so.
    """
    until = scenario.duration if until is None else until
    seed = scenario.seed if seed is None else seed
    states = install(scenario, policy)
    engine = Engine(scenario, states, until, seed, policy)
    calls_before = ControlPlaneAudit.invocations
    logger.debug(Messages.RUNNING.format(scenario.name, seed, until))
    report = engine.run()
    report.control_plane_calls = ControlPlaneAudit.invocations - calls_before
    logger.debug(Messages.RUN_DONE.format(engine.env.now, report.events))
    return report
