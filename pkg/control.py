"""Scenario loading, validation and one-shot installation of switch state.

The control plane only acts before the simulation starts: load_scenario()
reads and validates a scenario file, install() turns it into initialized
switch state. Every install() call is counted in ControlPlaneAudit, so a run
can prove nothing touched the control plane after time zero.
"""
from bisect import bisect_right
from collections.abc import Iterator
import configparser
from dataclasses import dataclass, field
from enum import StrEnum
from ipaddress import AddressValueError, IPv4Address, IPv4Network, NetmaskValueError
from pathlib import Path
from typing import NamedTuple

import networkx as nx

from common import Constants, logger, Messages, ScenarioParseError, ScenarioValidationError
from consolidation import ConsolidationState
from packets import mac, MAX_INDEX, MAX_SERVERS
from pipeline import LpmTable, Route, SwitchConfig, SwitchState, SwitchType
from workload import HostEntry, HostInfoTable, WorkloadState


HOURS_PER_DAY = 24.0
SCENARIO_SECTION = 'scenario'
TRAFFIC_SECTION = 'traffic'
REPORT_SECTION = 'report'
ROUTES_SECTION_PREFIX = 'routes.'
DEFAULT_SWITCH_POWER = 400.0
DEFAULT_ROUTE = (0, 0)


class NodeType(StrEnum):
    """Node types a scenario may declare."""  # noqa: D204
    CORE = 'core'
    AGGREGATION = 'aggregation'
    ACCESS = 'access'
    SERVER = 'server'
    CLIENT = 'client'


SWITCH_TYPES = {NodeType.CORE, NodeType.AGGREGATION, NodeType.ACCESS}


class Policy(StrEnum):
    """Width policies install() can put in place."""  # noqa: D204
    CONSOLIDATING = 'consolidating'
    PINNED_ECMP = 'pinned-ecmp'


class ControlPlaneAudit:  # pylint: disable=too-few-public-methods
    """Counter of control plane invocations."""  # noqa: D204
    invocations = 0


class StepProfile(NamedTuple):
    """Step interpolated value over the hours of a day, repeating daily.

    Before the first sample of the day the value of the last sample holds.
    """  # noqa: D204
    samples: tuple[tuple[float, float], ...]

    def value_at(self, hour: float) -> float:
        """Return the value at hour of the day."""
        if not self.samples:
            return 0.0
        position = bisect_right([sample[0] for sample in self.samples], hour % HOURS_PER_DAY)
        return self.samples[position - 1][1]

    def hours_to_next_change(self, hour: float) -> float | None:
        """Return how many hours from hour until the next sample, None if flat."""
        if len(self.samples) < 2:  # noqa: PLR2004
            return None
        hour %= HOURS_PER_DAY
        for sample_hour, _ in self.samples:
            if sample_hour > hour:
                return sample_hour - hour
        return self.samples[0][0] + HOURS_PER_DAY - hour


class TrafficProfile(NamedTuple):
    """Client traffic: daily new-flow rate profile and flow shape."""  # noqa: D204
    client: str
    targets: tuple[int, ...]
    rates: StepProfile
    request_packets: tuple[int, int]
    request_payload: int
    response_payload: int
    think_time: float


class ReportSpec(NamedTuple):
    """Parameters of the derived figures in the summary."""  # noqa: D204
    intervals: tuple[tuple[float, float], ...]
    switches: int
    switch_power: float


@dataclass(slots=True)
class NodeSpec:  # pylint: disable=too-many-instance-attributes
    """One node of the scenario topology, as declared."""

    name: str
    node_type: NodeType
    ports: tuple[str, ...]
    mac: int
    ip: int | None = None
    epoch_length: float = 1.0
    thresholds: tuple[int, ...] = ()
    uplinks: tuple[int, ...] = ()
    servers: tuple[int, ...] = ()
    external: int | None = None
    subnet: int | None = None
    vip: int | None = None
    trace: StepProfile = StepProfile(())
    timezone_offset: float = 0.0
    report_period: float = 0.0

    def port_of(self, neighbor: str) -> int:
        """Return the port number leading to neighbor."""
        return self.ports.index(neighbor) + 1

    @property
    def is_switch(self) -> bool:
        """Tell if the node is a switch."""
        return self.node_type in SWITCH_TYPES


@dataclass(slots=True)
class Scenario:  # pylint: disable=too-many-instance-attributes
    """A complete, validated experiment description."""

    name: str
    seed: int
    duration: float
    day_length: float
    window: float
    link_delay: float
    nodes: dict[str, NodeSpec]
    traffic: TrafficProfile | None
    report: ReportSpec
    routes: dict[str, list[tuple[int, int, str]]] = field(default_factory=dict)

    def hour_of(self, time: float) -> float:
        """Map simulated time onto the hour of the simulated day."""
        return (time * HOURS_PER_DAY / self.day_length) % HOURS_PER_DAY

    @property
    def seconds_per_hour(self) -> float:
        """Simulated seconds in one hour of the simulated day."""
        return self.day_length / HOURS_PER_DAY

    def switches(self) -> Iterator[NodeSpec]:
        """Yield the switch nodes in declaration order."""
        return (node for node in self.nodes.values() if node.is_switch)

    def hosts(self) -> Iterator[NodeSpec]:
        """Yield the host nodes in declaration order."""
        return (node for node in self.nodes.values() if not node.is_switch)

    def links(self) -> list[tuple[str, int, str, int]]:
        """Return every link once as (node, port, peer, peer port)."""
        links = []
        for node in self.nodes.values():
            for port, neighbor in enumerate(node.ports, start=1):
                if node.name < neighbor:
                    links.append((node.name, port, neighbor, self.nodes[neighbor].port_of(node.name)))
        return links

    def access_of(self, server: str) -> NodeSpec:
        """Return the access switch a server hangs from."""
        return self.nodes[self.nodes[server].ports[0]]


class _Section:
    """Typed, located access to the keys of one scenario section."""

    def __init__(self, config: configparser.ConfigParser, name: str) -> None:
        """Wrap section name of config."""
        self.name = name
        self.section = config[name] if config.has_section(name) else None

    def fail(self, key: str, problem: str) -> ScenarioValidationError:
        """Return a validation error located at key of this section."""
        return ScenarioValidationError(Messages.SCENARIO_INVALID, Messages.SCENARIO_LOCATION.format(self.name, key, problem))

    def raw(self, key: str, fallback: str | None = None) -> str:
        """Return the raw value of key, fallback if missing, fail if both missing."""
        value = self.section.get(key) if self.section is not None else None
        if value is None or not value.strip():
            if fallback is None:
                raise self.fail(key, Messages.MISSING_KEY)
            return fallback
        return value.strip()

    def has(self, key: str) -> bool:
        """Tell if key is present."""
        return self.section is not None and key in self.section

    def items(self, key: str, fallback: str | None = None) -> list[str]:
        """Return the comma separated items of key."""
        return [item.strip() for item in self.raw(key, fallback).split(Constants.LIST_SEPARATOR) if item.strip()]

    def number(self, key: str, fallback: float | None = None, *, positive: bool = False) -> float:
        """Return key as a float."""
        value = self.raw(key, None if fallback is None else repr(fallback))
        try:
            number = float(value)
        except ValueError as exc:
            raise self.fail(key, Messages.BAD_NUMBER.format(value)) from exc
        if positive and number <= 0:
            raise self.fail(key, Messages.NOT_POSITIVE)
        return number

    def integer(self, key: str, fallback: int | None = None) -> int:
        """Return key as an integer."""
        value = self.raw(key, None if fallback is None else str(fallback))
        try:
            return int(value)
        except ValueError as exc:
            raise self.fail(key, Messages.BAD_NUMBER.format(value)) from exc

    def address(self, key: str, fallback: str | None = None) -> int:
        """Return key as an integer IPv4 address."""
        value = self.raw(key, fallback)
        try:
            return int(IPv4Address(value))
        except AddressValueError as exc:
            raise self.fail(key, Messages.BAD_ADDRESS.format(value)) from exc

    def pairs(self, key: str, fallback: str | None = None) -> tuple[tuple[float, float], ...]:
        """Return key as ascending «hour:value» pairs within the day."""
        pairs = []
        for item in self.items(key, fallback):
            hour, _, value = item.partition(Constants.PAIR_SEPARATOR)
            try:
                pairs.append((float(hour), float(value)))
            except ValueError as exc:
                raise self.fail(key, Messages.BAD_PAIR.format(item)) from exc
        hours = [hour for hour, _ in pairs]
        if hours != sorted(set(hours)) or any(not 0 <= hour < HOURS_PER_DAY for hour in hours):
            raise self.fail(key, Messages.TRACE_NOT_ASCENDING)
        return tuple(pairs)


def _default_mac(position: int) -> int:
    """Return a locally administered MAC for the node at position."""
    return 0x02_00_00_00_00_00 | (position + 1)


def _read_config(path: Path) -> configparser.ConfigParser:
    """Read path as an INI file.

    Raise FileNotFoundError or PermissionError if path can not be read and
    ScenarioParseError for syntax errors.
    """
    config = configparser.ConfigParser(interpolation=None)
    config.optionxform = str  # type: ignore[assignment, method-assign]
    logger.debug(Messages.LOADING_SCENARIO.format(path))
    try:
        with path.open(encoding=Constants.UTF8) as inifile:
            config.read_file(inifile)
    except configparser.Error as exc:
        errorname = type(exc).__name__.removesuffix(configparser.Error.__name__)
        raise ScenarioParseError(Messages.SCENARIO_PARSE_ERROR.format(errorname), exc) from exc
    return config


def _is_node_section(name: str) -> bool:
    """Tell if a section declares a node."""
    return name not in {SCENARIO_SECTION, TRAFFIC_SECTION, REPORT_SECTION} and not name.startswith(ROUTES_SECTION_PREFIX)


def _neighbor_ports(section: _Section, key: str, ports: tuple[str, ...], fallback: str | None = None) -> tuple[int, ...]:
    """Return the port numbers of the neighbours listed in key."""
    result = []
    for neighbor in section.items(key, fallback):
        if neighbor not in ports:
            raise section.fail(key, Messages.UPLINK_NOT_A_PORT.format(neighbor))
        result.append(ports.index(neighbor) + 1)
    return tuple(result)


def _thresholds(section: _Section, fallback: str | None) -> tuple[int, ...]:
    """Return strictly ascending byte thresholds."""
    values = section.items('thresholds', fallback)
    try:
        thresholds = tuple(int(value) for value in values)
    except ValueError as exc:
        raise section.fail('thresholds', Messages.BAD_NUMBER.format(Constants.OUTPUT_SEPARATOR.join(values))) from exc
    if any(low >= high for low, high in zip(thresholds, thresholds[1:], strict=False)):
        raise section.fail('thresholds', Messages.NOT_ASCENDING.format(Constants.OUTPUT_SEPARATOR.join(values)))
    return thresholds


def _load_node(config: configparser.ConfigParser, name: str, position: int, defaults: _Section) -> NodeSpec:  # noqa: C901
    """Build the NodeSpec declared by section name."""
    section = _Section(config, name)
    type_name = section.raw('type')
    try:
        node_type = NodeType(type_name)
    except ValueError as exc:
        raise section.fail('type', Messages.BAD_NODE_TYPE.format(type_name)) from exc
    ports = tuple(section.items('ports'))
    if duplicated := [port for port in ports if ports.count(port) > 1]:
        raise section.fail('ports', Messages.DUPLICATE_PORT.format(duplicated[0]))
    macaddr = section.raw('mac', '')
    try:
        node_mac = mac(macaddr) if macaddr else _default_mac(position)
    except ValueError as exc:
        raise section.fail('mac', Messages.BAD_MAC.format(macaddr)) from exc
    node = NodeSpec(name, node_type, ports, node_mac)

    if not node.is_switch:
        if len(ports) != 1:
            raise section.fail('ports', Messages.HOST_PORTS)
        node.ip = section.address('ip')
        if node_type == NodeType.SERVER:
            node.trace = StepProfile(section.pairs('trace', '0:0'))
            for _, index in node.trace.samples:
                if not 0 <= index <= MAX_INDEX or index != int(index):
                    raise section.fail('trace', Messages.INDEX_RANGE.format(index))
            node.timezone_offset = section.number('timezone_offset', 0.0)
            node.report_period = section.number('report_period', 0.0)
        return node

    node.epoch_length = section.number('epoch_length', defaults.number('epoch_length', 1.0), positive=True)
    fallback_thresholds = defaults.raw('thresholds', '')
    if node_type in {NodeType.CORE, NodeType.ACCESS}:
        node.uplinks = _neighbor_ports(section, 'uplinks', ports)
        if not node.uplinks:
            raise section.fail('uplinks', Messages.NO_UPLINKS)
        node.thresholds = _thresholds(section, fallback_thresholds)
        if len(node.thresholds) != len(node.uplinks) - 1:
            raise section.fail('thresholds', Messages.WRONG_THRESHOLD_COUNT.format(len(node.uplinks) - 1, len(node.thresholds)))
    if node_type == NodeType.CORE:
        node.external = _neighbor_ports(section, 'external', ports)[0]
    if node_type == NodeType.ACCESS:
        subnet = section.raw('subnet')
        try:
            network = IPv4Network(subnet if '/' in subnet else f'{subnet}.0/24')
        except (AddressValueError, NetmaskValueError, ValueError) as exc:
            raise section.fail('subnet', Messages.BAD_SUBNET.format(subnet)) from exc
        if network.prefixlen != 24:  # noqa: PLR2004
            raise section.fail('subnet', Messages.BAD_SUBNET.format(subnet))
        node.subnet = int(network.network_address)
        node.vip = section.address('vip')
        if IPv4Address(node.vip) not in network:
            raise section.fail('vip', Messages.VIP_OUTSIDE_SUBNET.format(IPv4Address(node.vip), network))
    return node


def _check_topology(nodes: dict[str, NodeSpec], config: configparser.ConfigParser) -> None:  # noqa: C901
    """Check links, roles and addresses across nodes."""
    for node in nodes.values():
        section = _Section(config, node.name)
        for neighbor in node.ports:
            if neighbor not in nodes:
                raise section.fail('ports', Messages.UNKNOWN_NODE.format(neighbor))
            if node.name not in nodes[neighbor].ports:
                raise section.fail('ports', Messages.LINK_ASYMMETRIC.format(neighbor, neighbor))
        if node.node_type == NodeType.ACCESS:
            if section.has('servers'):
                node.servers = _neighbor_ports(section, 'servers', node.ports)
            else:
                node.servers = tuple(
                    port for port, neighbor in enumerate(node.ports, start=1)
                    if nodes[neighbor].node_type == NodeType.SERVER
                )
            if not node.servers:
                raise section.fail('servers', Messages.NO_SERVERS)
            if len(node.servers) > MAX_SERVERS:
                raise section.fail('servers', Messages.SERVER_ID_OVERFLOW.format(len(node.servers)))

    cores = [node for node in nodes.values() if node.node_type == NodeType.CORE]
    if len(cores) != 1:
        raise ScenarioValidationError(Messages.SCENARIO_INVALID, Messages.NO_CORE.format(len(cores)))

    owners: dict[int, str] = {}
    for node in nodes.values():
        for key, address in (('ip', node.ip), ('vip', node.vip)):
            if address is None:
                continue
            if address in owners:
                message = Messages.DUPLICATE_VIP if key == 'vip' else Messages.DUPLICATE_ADDRESS
                raise _Section(config, node.name).fail(key, message.format(IPv4Address(address), owners[address]))
            owners[address] = node.name


def _load_traffic(config: configparser.ConfigParser, nodes: dict[str, NodeSpec]) -> TrafficProfile | None:
    """Build the traffic profile, None if the scenario has no traffic."""
    if not config.has_section(TRAFFIC_SECTION):
        return None
    section = _Section(config, TRAFFIC_SECTION)
    client = section.raw('client')
    if client not in nodes or nodes[client].node_type != NodeType.CLIENT:
        raise section.fail('client', Messages.UNKNOWN_NODE.format(client))
    vips = [node.vip for node in nodes.values() if node.vip is not None]
    if section.has('targets'):
        targets = []
        for target in section.items('targets'):
            address = _parse_target(section, target)
            if address not in vips:
                raise section.fail('targets', Messages.UNKNOWN_TARGET.format(target))
            targets.append(address)
    else:
        targets = vips
    rates = section.pairs('rates', '0:0')
    for _, rate in rates:
        if rate < 0:
            raise section.fail('rates', Messages.NEGATIVE_RATE.format(rate))
    request_packets = section.items('request_packets', '1, 1')
    try:
        low, high = (int(value) for value in request_packets)
    except ValueError as exc:
        raise section.fail('request_packets', Messages.BAD_REQUEST_RANGE.format(request_packets)) from exc
    if not 1 <= low <= high:
        raise section.fail('request_packets', Messages.BAD_REQUEST_RANGE.format(request_packets))
    return TrafficProfile(
        client=client,
        targets=tuple(targets),
        rates=StepProfile(rates),
        request_packets=(low, high),
        request_payload=section.integer('request_payload', 0),
        response_payload=section.integer('response_payload', 0),
        think_time=section.number('think_time', 0.0),
    )


def _parse_target(section: _Section, target: str) -> int:
    """Return a target VIP as an integer address."""
    try:
        return int(IPv4Address(target))
    except AddressValueError as exc:
        raise section.fail('targets', Messages.BAD_ADDRESS.format(target)) from exc


def _load_report(config: configparser.ConfigParser, nodes: dict[str, NodeSpec]) -> ReportSpec:
    """Build the report parameters."""
    section = _Section(config, REPORT_SECTION)
    intervals = []
    for item in section.items('intervals', ' '):
        start, _, end = item.partition(Constants.RANGE_SEPARATOR)
        try:
            interval = (float(start), float(end))
        except ValueError as exc:
            raise section.fail('intervals', Messages.BAD_RANGE.format(item)) from exc
        if not 0 <= interval[0] < interval[1] <= HOURS_PER_DAY:
            raise section.fail('intervals', Messages.BAD_RANGE.format(item))
        intervals.append(interval)
    aggregation = sum(node.node_type == NodeType.AGGREGATION for node in nodes.values())
    return ReportSpec(
        intervals=tuple(intervals),
        switches=section.integer('switches', aggregation),
        switch_power=section.number('switch_power', DEFAULT_SWITCH_POWER),
    )


def _load_routes(config: configparser.ConfigParser, nodes: dict[str, NodeSpec]) -> dict[str, list[tuple[int, int, str]]]:
    """Return the explicit route overrides per switch."""
    routes: dict[str, list[tuple[int, int, str]]] = {}
    for name in config.sections():
        if not name.startswith(ROUTES_SECTION_PREFIX):
            continue
        switch = name.removeprefix(ROUTES_SECTION_PREFIX)
        section = _Section(config, name)
        if switch not in nodes or not nodes[switch].is_switch:
            raise section.fail('', Messages.UNKNOWN_NODE.format(switch))
        for prefix, neighbor in config[name].items():
            try:
                network = IPv4Network(prefix)
            except (AddressValueError, NetmaskValueError, ValueError) as exc:
                raise section.fail(prefix, Messages.BAD_ADDRESS.format(prefix)) from exc
            if neighbor.strip() not in nodes[switch].ports:
                raise section.fail(prefix, Messages.UPLINK_NOT_A_PORT.format(neighbor.strip()))
            routes.setdefault(switch, []).append((int(network.network_address), network.prefixlen, neighbor.strip()))
    return routes


def load_scenario(path: Path) -> Scenario:
    """Load and validate the scenario in path.

    Raise FileNotFoundError or PermissionError if path can not be read,
    ScenarioParseError for syntax errors and ScenarioValidationError, whose
    details name the offending section and key, for broken invariants.
    """
    config = _read_config(path)
    if not config.has_section(SCENARIO_SECTION):
        raise ScenarioValidationError(Messages.SCENARIO_INVALID, Messages.SCENARIO_LOCATION.format(SCENARIO_SECTION, '', Messages.MISSING_SECTION))
    scenario_section = _Section(config, SCENARIO_SECTION)
    schema = scenario_section.integer('schema')
    if schema != Constants.SCENARIO_SCHEMA_VERSION:
        raise scenario_section.fail('schema', Messages.SCHEMA_UNSUPPORTED.format(schema, Constants.SCENARIO_SCHEMA_VERSION))

    node_names = [name for name in config.sections() if _is_node_section(name)]
    nodes = {name: _load_node(config, name, position, scenario_section) for position, name in enumerate(node_names)}
    _check_topology(nodes, config)

    day_length = scenario_section.number('day_length', 86400.0, positive=True)
    epoch_lengths = [node.epoch_length for node in nodes.values() if node.is_switch]
    scenario = Scenario(
        name=scenario_section.raw('name', path.stem),
        seed=scenario_section.integer('seed', 0),
        duration=scenario_section.number('duration', day_length, positive=True),
        day_length=day_length,
        window=scenario_section.number('window', min(epoch_lengths, default=1.0), positive=True),
        link_delay=scenario_section.number('link_delay', 0.0),
        nodes=nodes,
        traffic=_load_traffic(config, nodes),
        report=_load_report(config, nodes),
        routes=_load_routes(config, nodes),
    )
    logger.debug(Messages.SCENARIO_VALID.format(
        scenario.name,
        sum(1 for _ in scenario.switches()),
        sum(1 for _ in scenario.hosts()),
        len(scenario.links()),
    ))
    return scenario


def topology_graph(scenario: Scenario) -> nx.Graph:
    """Return the topology as an undirected graph whose edges carry the ports."""
    graph = nx.Graph()
    graph.add_nodes_from(scenario.nodes)
    for node, port, peer, peer_port in scenario.links():
        graph.add_edge(node, peer, ports={node: port, peer: peer_port})
    return graph


def _next_hops(graph: nx.Graph, destination: str) -> dict[str, str]:
    """Return, for every node reaching destination, its next hop towards it.

    Among equally short paths the neighbour with the smallest name wins.
    """
    distances = nx.single_source_shortest_path_length(graph, destination)
    hops = {}
    for node, distance in distances.items():
        if distance == 0:
            continue
        hops[node] = min(
            neighbor for neighbor in graph.neighbors(node)
            if distances.get(neighbor) == distance - 1
        )
    return hops


def derive_routes(scenario: Scenario) -> dict[str, LpmTable]:
    """Compute the LPM table of every switch from the topology.

    Every host gets a /32 route, every access subnet a /24 route and every
    VIP a /32 route towards its access switch; the core switch also gets a
    default route through its external port. Explicit overrides go last.
    """
    graph = topology_graph(scenario)
    tables = {switch.name: LpmTable() for switch in scenario.switches()}

    def install_towards(destination: str, prefix: int, length: int) -> None:
        for node, hop in _next_hops(graph, destination).items():
            if node in tables:
                spec = scenario.nodes[node]
                tables[node].add(prefix, length, Route(spec.port_of(hop), scenario.nodes[hop].mac))

    for node in scenario.nodes.values():
        if node.ip is not None:
            install_towards(node.name, node.ip, 32)
        if node.subnet is not None:
            install_towards(node.name, node.subnet, 24)
        if node.vip is not None:
            install_towards(node.name, node.vip, 32)
        if node.external is not None:
            peer = node.ports[node.external - 1]
            tables[node.name].add(*DEFAULT_ROUTE, Route(node.external, scenario.nodes[peer].mac))

    for switch, overrides in scenario.routes.items():
        spec = scenario.nodes[switch]
        for prefix, length, neighbor in overrides:
            tables[switch].add(prefix, length, Route(spec.port_of(neighbor), scenario.nodes[neighbor].mac))
    return tables


def install(scenario: Scenario, policy: Policy = Policy.CONSOLIDATING) -> dict[str, SwitchState]:
    """Build the initial state of every switch in scenario.

    Widths start at 1 (at the maximum under the pinned ECMP policy), traffic
    counters and epoch starts at 0, availability indices at 0.
    """
    ControlPlaneAudit.invocations += 1
    logger.debug(Messages.INSTALLING.format(sum(1 for _ in scenario.switches()), policy))
    tables = derive_routes(scenario)
    states = {}
    for node in scenario.switches():
        config = SwitchConfig(
            switch_id=node.name,
            switch_type=SwitchType(node.node_type),
            mac=node.mac,
            uplink_ports=node.uplinks,
            server_ports=frozenset(node.servers),
            external_port=node.external,
            subnet_prefix=node.subnet,
            virtual_ip=node.vip,
        )
        state = SwitchState(
            config=config,
            lpm=tables[node.name],
            neighbor_macs={port: scenario.nodes[neighbor].mac for port, neighbor in enumerate(node.ports, start=1)},
        )
        if node.uplinks:
            state.consolidation = ConsolidationState(
                epoch_length=node.epoch_length,
                traffic_thresholds=node.thresholds,
                max_width=len(node.uplinks),
                pinned=policy == Policy.PINNED_ECMP,
                switch_name=node.name,
            )
        if node.node_type == NodeType.ACCESS and node.vip is not None and node.subnet is not None:
            host_info = HostInfoTable()
            for port in node.servers:
                server = scenario.nodes[node.ports[port - 1]]
                host_info.add(HostEntry(server.ip or 0, server.mac, port))
            state.workload = WorkloadState(node.vip, node.subnet, host_info, switch_name=node.name)
        states[node.name] = state
        logger.debug(Messages.INSTALLED_SWITCH.format(
            node.name,
            node.node_type,
            len(state.lpm),
            len(state.workload.host_info) if state.workload else 0,
            state.consolidation.aggr_switches if state.consolidation else 1,
        ))
    return states


def server_names(scenario: Scenario) -> dict[tuple[str, int], str]:
    """Map (access switch, server ID) to server name, in install() order."""
    names = {}
    for node in scenario.switches():
        for server_id, port in enumerate(node.servers):
            names[(node.name, server_id)] = node.ports[port - 1]
    return names
