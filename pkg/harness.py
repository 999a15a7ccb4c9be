"""Run metrics, the figures derived from them, and their CSV persistence.

Everything in the summary is a pure function of the raw counters held by a
MetricsReport, and the raw counters are exactly what the CSV files store, so
reading a result directory back gives the very same summary.
"""
import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

from common import Constants, Messages, ReportError


HOURS_PER_DAY = 24.0
INDEX_SEPARATOR = ' '
AGGREGATION = 'aggregation'
TYPE_KEY_PREFIX = 'type.'


class Reduction(NamedTuple):
    """Switch operation time reduction, in percent."""  # noqa: D204
    percent: float
    active: int
    reference: int

    @property
    def no_traffic(self) -> bool:
        """Tell if the reference carried no traffic at all."""
        return self.reference == 0


@dataclass(slots=True)
class FlowRecord:  # pylint: disable=too-many-instance-attributes
    """What happened to one client flow.

    bytes and packets count what the client sent towards the server, SYN
    included; responses are not counted, so every share derived from them is
    a share of the traffic going to the servers.
    """

    flow_id: int
    start: float
    client_port: int
    vip: str
    access: str = ''
    server_id: int = -1
    server: str = ''
    indices: tuple[int, ...] = ()
    bytes: int = 0
    packets: int = 0

    @property
    def selected(self) -> bool:
        """Tell if some access switch picked a server for this flow."""
        return self.server_id >= 0


@dataclass(slots=True)
class MetricsReport:  # pylint: disable=too-many-instance-attributes
    """Raw counters of one simulation run."""

    scenario: str
    seed: int
    policy: str
    window: float
    day_length: float
    duration: float
    intervals: tuple[tuple[float, float], ...] = ()
    switches: int = 0
    switch_power: float = 0.0
    switch_types: dict[str, str] = field(default_factory=dict)
    switch_load: dict[str, dict[int, list[int]]] = field(default_factory=dict)
    width_log: list[tuple[float, str, int, int, int]] = field(default_factory=list)
    server_load: dict[str, dict[int, list[int]]] = field(default_factory=dict)
    indices: list[tuple[float, str, int]] = field(default_factory=list)
    flows: list[FlowRecord] = field(default_factory=list)
    drops: dict[str, list[int]] = field(default_factory=dict)
    injected_bytes: int = 0
    injected_packets: int = 0
    delivered_bytes: int = 0
    delivered_packets: int = 0
    affinity_violations: int = 0
    vip_violations: int = 0
    control_plane_calls: int = 0
    events: int = 0

    def window_of(self, time: float) -> int:
        """Return the accounting window time falls in."""
        return int(time // self.window)

    def hour_of(self, time: float) -> float:
        """Map simulated time onto the hour of the simulated day."""
        return (time * HOURS_PER_DAY / self.day_length) % HOURS_PER_DAY

    def record_forward(self, switch: str, time: float, nbytes: int) -> None:
        """Count a packet forwarded by switch."""
        counters = self.switch_load.setdefault(switch, {}).setdefault(self.window_of(time), [0, 0])
        counters[0] += nbytes
        counters[1] += 1

    def record_drop(self, cause: str, nbytes: int) -> None:
        """Count a dropped packet under cause."""
        counters = self.drops.setdefault(cause, [0, 0])
        counters[0] += 1
        counters[1] += nbytes

    def record_injected(self, nbytes: int) -> None:
        """Count a packet sent by some host."""
        self.injected_bytes += nbytes
        self.injected_packets += 1

    def record_delivered(self, nbytes: int) -> None:
        """Count a packet which reached a host or was consumed by a switch."""
        self.delivered_bytes += nbytes
        self.delivered_packets += 1

    def record_server_packet(self, server: str, time: float, nbytes: int, *, new_flow: bool) -> None:
        """Count a packet delivered to server."""
        counters = self.server_load.setdefault(server, {}).setdefault(self.window_of(time), [0, 0])
        counters[0] += int(new_flow)
        counters[1] += nbytes

    @property
    def dropped_bytes(self) -> int:
        """Bytes dropped, all causes together."""
        return sum(nbytes for _, nbytes in self.drops.values())


def aggregation_switches(report: MetricsReport) -> list[str]:
    """Return the names of the aggregation switches, sorted."""
    return sorted(name for name, kind in report.switch_types.items() if kind == AGGREGATION)


def active_windows(report: MetricsReport, switch: str) -> int:
    """Return in how many windows switch forwarded some bytes."""
    return sum(1 for nbytes, _ in report.switch_load.get(switch, {}).values() if nbytes > 0)


def aggregation_active_windows(report: MetricsReport) -> int:
    """Return the active windows of all aggregation switches together."""
    return sum(active_windows(report, switch) for switch in aggregation_switches(report))


def _reduction(active: int, reference: int) -> Reduction:
    if not reference:
        return Reduction(0.0, active, reference)
    return Reduction(100.0 * (1 - active / reference), active, reference)


def switch_hour_reduction(report: MetricsReport, baseline: MetricsReport) -> Reduction:
    """Compare aggregation switch operation time of report against a pinned ECMP baseline."""
    return _reduction(aggregation_active_windows(report), aggregation_active_windows(baseline))


def reduction_vs_always_on(report: MetricsReport) -> Reduction:
    """Compare aggregation switch operation time against all of them running.

    The reference has every aggregation switch active in every window in
    which the fabric carried any traffic.
    """
    busy = {window for load in report.switch_load.values() for window, (nbytes, _) in load.items() if nbytes > 0}
    return _reduction(aggregation_active_windows(report), len(aggregation_switches(report)) * len(busy))


def energy_saving_estimate(reduction: float, n_switches: int, per_switch_power: float) -> float:
    """Return the energy saved in Wh by a fractional operation time reduction."""
    return reduction * n_switches * per_switch_power


def is_green_directed(flow: FlowRecord) -> bool:
    """Tell if flow went to a server reporting strictly more than some peer, and the most overall."""
    if not flow.selected or not flow.indices:
        return False
    chosen = flow.indices[flow.server_id]
    return chosen == max(flow.indices) and chosen > 0 and min(flow.indices) < chosen


def green_share(report: MetricsReport) -> float:
    """Return the percentage of flow bytes which were green-directed."""
    flows = [flow for flow in report.flows if flow.selected]
    total = sum(flow.bytes for flow in flows)
    if not total:
        return 0.0
    return 100.0 * sum(flow.bytes for flow in flows if is_green_directed(flow)) / total


def interval_share(report: MetricsReport, start: float, end: float) -> dict[str, float]:
    """Return the percentage of flow bytes each server got from flows started between start and end hours."""
    tally: dict[str, int] = {}
    for flow in report.flows:
        if flow.selected and start <= report.hour_of(flow.start) < end:
            tally[flow.server] = tally.get(flow.server, 0) + flow.bytes
    total = sum(tally.values())
    return {server: 100.0 * nbytes / total for server, nbytes in sorted(tally.items())} if total else {}


def conservation_holds(report: MetricsReport) -> bool:
    """Tell if every injected byte was either delivered or dropped."""
    return report.injected_bytes == report.delivered_bytes + report.dropped_bytes


def _fmt(value: float) -> str:
    return Constants.SUMMARY_FLOAT_FORMAT.format(value)


def _hours(value: float) -> str:
    return f'{value:05.2f}'.rstrip('0').rstrip('.')


def summary(report: MetricsReport) -> dict[str, str]:
    """Return the derived figures of report as ordered key, value pairs."""
    reduction = reduction_vs_always_on(report)
    figures = {
        'scenario': report.scenario,
        'seed': str(report.seed),
        'policy': report.policy,
        'duration': _fmt(report.duration),
        'events': str(report.events),
        'flows': str(len(report.flows)),
        'injected_bytes': str(report.injected_bytes),
        'delivered_bytes': str(report.delivered_bytes),
        'dropped_bytes': str(report.dropped_bytes),
        'conservation': str(conservation_holds(report)).lower(),
        'affinity_violations': str(report.affinity_violations),
        'vip_violations': str(report.vip_violations),
        'control_plane_calls': str(report.control_plane_calls),
        'aggregation_active_windows': str(reduction.active),
        'always_on_windows': str(reduction.reference),
        'reduction_vs_always_on_pct': _fmt(reduction.percent),
        'energy_saving_wh': _fmt(energy_saving_estimate(reduction.percent / 100, report.switches, report.switch_power)),
        'green_share_pct': _fmt(green_share(report)),
    }
    for start, end in report.intervals:
        for server, share in interval_share(report, start, end).items():
            figures[f'share_{_hours(start)}-{_hours(end)}_{server}_pct'] = _fmt(share)
    for cause, (packets, _) in sorted(report.drops.items()):
        figures[f'drops_{cause}'] = str(packets)
    return figures


def write_summary(figures: dict[str, str], path: Path) -> None:
    """Write figures as key = value lines."""
    with path.open('w', encoding=Constants.UTF8) as summary_file:
        summary_file.writelines(Constants.SUMMARY_PAIR.format(key, value) for key, value in figures.items())


def _write_csv(path: Path, header: list[str], rows: list[list[object]]) -> None:
    with path.open('w', encoding=Constants.UTF8, newline='') as csvfile:
        writer = csv.writer(csvfile)
        writer.writerow(header)
        writer.writerows(rows)


def write_report(report: MetricsReport, directory: Path) -> None:
    """Write report as CSV files plus a summary into directory."""
    directory.mkdir(parents=True, exist_ok=True)
    _write_csv(directory / Constants.CSV_SWITCH_LOAD, ['window', 'start', 'switch', 'type', 'bytes', 'packets'], [
        [window, window * report.window, switch, report.switch_types.get(switch, ''), nbytes, packets]
        for switch in sorted(report.switch_load)
        for window, (nbytes, packets) in sorted(report.switch_load[switch].items())
    ])
    _write_csv(directory / Constants.CSV_WIDTH_LOG, ['time', 'switch', 'traffic', 'before', 'after'], [
        list(entry) for entry in report.width_log
    ])
    _write_csv(directory / Constants.CSV_SERVER_LOAD, ['window', 'start', 'server', 'flows', 'bytes'], [
        [window, window * report.window, server, flows, nbytes]
        for server in sorted(report.server_load)
        for window, (flows, nbytes) in sorted(report.server_load[server].items())
    ])
    _write_csv(directory / Constants.CSV_INDICES, ['time', 'hour', 'server', 'index'], [
        [time, report.hour_of(time), server, index] for time, server, index in report.indices
    ])
    _write_csv(directory / Constants.CSV_FLOWS, [
        'flow_id', 'start', 'client_port', 'vip', 'access', 'server_id', 'server', 'indices', 'bytes', 'packets',
    ], [
        [
            flow.flow_id, flow.start, flow.client_port, flow.vip, flow.access, flow.server_id, flow.server,
            INDEX_SEPARATOR.join(str(index) for index in flow.indices), flow.bytes, flow.packets,
        ]
        for flow in report.flows
    ])
    _write_csv(directory / Constants.CSV_DROPS, ['cause', 'packets', 'bytes'], [
        [cause, packets, nbytes] for cause, (packets, nbytes) in sorted(report.drops.items())
    ])
    meta: list[list[object]] = [
        ['scenario', report.scenario],
        ['seed', report.seed],
        ['policy', report.policy],
        ['window', report.window],
        ['day_length', report.day_length],
        ['duration', report.duration],
        ['intervals', Constants.LIST_SEPARATOR.join(
            f'{start!r}{Constants.RANGE_SEPARATOR}{end!r}' for start, end in report.intervals
        )],
        ['switches', report.switches],
        ['switch_power', report.switch_power],
        ['injected_bytes', report.injected_bytes],
        ['injected_packets', report.injected_packets],
        ['delivered_bytes', report.delivered_bytes],
        ['delivered_packets', report.delivered_packets],
        ['affinity_violations', report.affinity_violations],
        ['vip_violations', report.vip_violations],
        ['control_plane_calls', report.control_plane_calls],
        ['events', report.events],
    ]
    meta.extend([f'{TYPE_KEY_PREFIX}{switch}', kind] for switch, kind in sorted(report.switch_types.items()))
    _write_csv(directory / Constants.CSV_META, ['key', 'value'], meta)
    write_summary(summary(report), directory / Constants.SUMMARY_FILE)


def _read_csv(path: Path) -> list[dict[str, str]]:
    try:
        with path.open(encoding=Constants.UTF8, newline='') as csvfile:
            return list(csv.DictReader(csvfile))
    except OSError as exc:
        raise ReportError(Messages.MISSING_RESULT_FILE.format(path), exc) from exc


def read_report(directory: Path) -> MetricsReport:  # noqa: C901
    """Rebuild the MetricsReport written by write_report() into directory.

    Raise ReportError if some file is missing or malformed.
    """
    current = directory / Constants.CSV_META
    try:
        meta = {row['key']: row['value'] for row in _read_csv(current)}
        intervals = []
        for item in meta['intervals'].split(Constants.LIST_SEPARATOR):
            if item:
                start, _, end = item.partition(Constants.RANGE_SEPARATOR)
                intervals.append((float(start), float(end)))
        report = MetricsReport(
            scenario=meta['scenario'],
            seed=int(meta['seed']),
            policy=meta['policy'],
            window=float(meta['window']),
            day_length=float(meta['day_length']),
            duration=float(meta['duration']),
            intervals=tuple(intervals),
            switches=int(meta['switches']),
            switch_power=float(meta['switch_power']),
            switch_types={
                key.removeprefix(TYPE_KEY_PREFIX): value
                for key, value in meta.items() if key.startswith(TYPE_KEY_PREFIX)
            },
            injected_bytes=int(meta['injected_bytes']),
            injected_packets=int(meta['injected_packets']),
            delivered_bytes=int(meta['delivered_bytes']),
            delivered_packets=int(meta['delivered_packets']),
            affinity_violations=int(meta['affinity_violations']),
            vip_violations=int(meta['vip_violations']),
            control_plane_calls=int(meta['control_plane_calls']),
            events=int(meta['events']),
        )
        current = directory / Constants.CSV_SWITCH_LOAD
        for row in _read_csv(current):
            report.switch_load.setdefault(row['switch'], {})[int(row['window'])] = [int(row['bytes']), int(row['packets'])]
        current = directory / Constants.CSV_WIDTH_LOG
        report.width_log = [
            (float(row['time']), row['switch'], int(row['traffic']), int(row['before']), int(row['after']))
            for row in _read_csv(current)
        ]
        current = directory / Constants.CSV_SERVER_LOAD
        for row in _read_csv(current):
            report.server_load.setdefault(row['server'], {})[int(row['window'])] = [int(row['flows']), int(row['bytes'])]
        current = directory / Constants.CSV_INDICES
        report.indices = [(float(row['time']), row['server'], int(row['index'])) for row in _read_csv(current)]
        current = directory / Constants.CSV_FLOWS
        report.flows = [
            FlowRecord(
                flow_id=int(row['flow_id']),
                start=float(row['start']),
                client_port=int(row['client_port']),
                vip=row['vip'],
                access=row['access'],
                server_id=int(row['server_id']),
                server=row['server'],
                indices=tuple(int(index) for index in row['indices'].split(INDEX_SEPARATOR) if index),
                bytes=int(row['bytes']),
                packets=int(row['packets']),
            )
            for row in _read_csv(current)
        ]
        current = directory / Constants.CSV_DROPS
        report.drops = {row['cause']: [int(row['packets']), int(row['bytes'])] for row in _read_csv(current)}
    except (KeyError, TypeError, ValueError) as exc:
        raise ReportError(Messages.BAD_RESULT_FILE.format(current), exc) from exc
    return report
