#! /usr/bin/env python3
"""Test suite for metrics, derived figures and result files."""
from collections.abc import Callable
from pathlib import Path

import pytest

from common import Constants, ReportError
from conftest import SMALL_TRAFFIC
from control import load_scenario, Policy
from harness import (
    aggregation_active_windows,
    conservation_holds,
    energy_saving_estimate,
    FlowRecord,
    green_share,
    interval_share,
    is_green_directed,
    MetricsReport,
    read_report,
    reduction_vs_always_on,
    summary,
    switch_hour_reduction,
    write_report,
)
from simkernel import run

SWITCH_TYPES = {'core': 'core', 'agg1': 'aggregation', 'agg2': 'aggregation', 'agg3': 'aggregation', 'access1': 'access'}


def metrics(**kwargs: object) -> MetricsReport:
    """Build an empty report of a day lasting 2400 seconds, windows of 1 second."""
    defaults: dict[str, object] = {
        'scenario': 'unit',
        'seed': 1,
        'policy': Policy.CONSOLIDATING,
        'window': 1.0,
        'day_length': 2400.0,
        'duration': 2400.0,
        'switch_types': dict(SWITCH_TYPES),
    }
    return MetricsReport(**(defaults | kwargs))  # type: ignore[arg-type]


def load(report: MetricsReport, switches: dict[str, range]) -> MetricsReport:
    """Make every switch forward 100 bytes in each of its windows."""
    for switch, windows in switches.items():
        for window in windows:
            report.record_forward(switch, float(window), 100)
    return report


def flow(server_id: int, indices: tuple[int, ...], nbytes: int = 1000, start: float = 0.0) -> FlowRecord:
    """Build a flow which was dispatched to server_id."""
    return FlowRecord(0, start, 1024, '10.0.1.100', 'access1', server_id, f's{server_id + 1}', indices, nbytes, 2)


def test_energy_saving_estimate() -> None:  # pylint: disable=unused-variable
    """Test the energy figure of a 36% reduction over 32 switches."""
    assert energy_saving_estimate(0.36, 32, 400.0) == pytest.approx(4608.0)
    assert energy_saving_estimate(0.0, 32, 400.0) == 0.0


def test_reduction_single_path() -> None:  # pylint: disable=unused-variable
    """Test a light load kept on one of three aggregation switches."""
    report = load(metrics(), {'agg1': range(10), 'core': range(10)})
    baseline = load(metrics(policy=Policy.PINNED_ECMP), {'agg1': range(10), 'agg2': range(10), 'agg3': range(10)})

    reduction = switch_hour_reduction(report, baseline)

    assert reduction.percent == pytest.approx(200 / 3)
    assert (reduction.active, reduction.reference) == (10, 30)
    assert not reduction.no_traffic


def test_reduction_without_traffic() -> None:  # pylint: disable=unused-variable
    """Test that no traffic means no reduction, flagged."""
    reduction = switch_hour_reduction(metrics(), metrics())

    assert reduction.percent == 0.0
    assert reduction.no_traffic
    assert reduction_vs_always_on(metrics()).no_traffic


def test_reduction_vs_always_on() -> None:  # pylint: disable=unused-variable
    """Test the reference of every aggregation switch on whenever the fabric is busy."""
    report = load(metrics(), {'core': range(20), 'agg1': range(20), 'agg2': range(5, 10)})
    report.record_forward('agg3', 30.0, 0)

    reduction = reduction_vs_always_on(report)

    assert aggregation_active_windows(report) == 25  # noqa: PLR2004
    assert reduction.reference == 60  # noqa: PLR2004
    assert reduction.percent == pytest.approx(100 * (1 - 25 / 60))


@pytest.mark.parametrize(('server_id', 'indices', 'expected'), [
    (0, (50, 0), True),
    (1, (50, 0), False),
    (0, (50, 50), False),
    (0, (0, 0), False),
    (1, (3, 9, 9), False),
    (2, (3, 9, 9), True),
    (0, (), False),
])
def test_is_green_directed(server_id: int, indices: tuple[int, ...], expected: bool) -> None:  # pylint: disable=unused-variable
    """Test the green-directed rule: the maximum, above zero, beating some peer."""
    assert is_green_directed(flow(server_id, indices)) == expected


def test_green_share() -> None:  # pylint: disable=unused-variable
    """Test the share of green-directed bytes."""
    report = metrics(flows=[
        flow(0, (50, 0), nbytes=300),
        flow(1, (50, 0), nbytes=100),
        flow(0, (0, 0), nbytes=600),
        FlowRecord(9, 0.0, 2000, '10.0.1.100', bytes=5000),
    ])

    assert green_share(report) == pytest.approx(30.0)
    assert green_share(metrics()) == 0.0


def test_interval_share() -> None:  # pylint: disable=unused-variable
    """Test byte shares by flow start hour."""
    report = metrics(flows=[
        flow(0, (0, 0), nbytes=300, start=500.0),
        flow(1, (0, 0), nbytes=100, start=510.0),
        flow(1, (0, 0), nbytes=999, start=1500.0),
    ])

    assert interval_share(report, 5.0, 13.0) == {'s1': 75.0, 's2': 25.0}
    assert interval_share(report, 13.0, 24.0) == {'s2': 100.0}
    assert interval_share(report, 0.0, 5.0) == {}


def test_conservation() -> None:  # pylint: disable=unused-variable
    """Test the byte conservation check."""
    report = metrics()
    report.record_injected(300)
    report.record_delivered(200)
    assert not conservation_holds(report)

    report.record_drop('NoRoute', 100)
    assert conservation_holds(report)
    assert summary(report)['drops_NoRoute'] == '1'


def test_summary_format() -> None:  # pylint: disable=unused-variable
    """Test summary keys and number formatting."""
    report = load(metrics(intervals=((0.0, 5.5), (5.5, 24.0)), switches=32, switch_power=400.0), {'agg1': range(3)})
    report.flows = [flow(0, (0, 0), start=100.0), flow(1, (0, 0), start=100.0)]

    figures = summary(report)

    assert figures['scenario'] == 'unit'
    assert figures['policy'] == 'consolidating'
    assert figures['duration'] == '2400.0000'
    assert figures['conservation'] == 'true'
    assert figures['reduction_vs_always_on_pct'] == '66.6667'
    assert figures['energy_saving_wh'] == '8533.3333'
    assert figures['share_00-05.5_s1_pct'] == '50.0000'
    assert figures['share_00-05.5_s2_pct'] == '50.0000'
    assert not any(key.startswith('share_05.5-24') for key in figures)


def test_report_round_trip(tmp_path: Path) -> None:  # pylint: disable=unused-variable
    """Test that the summary survives writing and reading the result files."""
    report = load(metrics(intervals=((0.0, 12.0),), switches=8, switch_power=250.0), {'agg1': range(4), 'core': range(6)})
    report.width_log = [(1.0, 'core', 20000, 1, 2), (2.5, 'core', 15, 2, 1)]
    report.record_server_packet('s1', 0.25, 166, new_flow=True)
    report.indices = [(0.0, 's1', 0), (0.0, 's2', 17)]
    report.flows = [flow(0, (0, 17), nbytes=232, start=0.1), flow(1, (0, 17), nbytes=398, start=0.7)]
    report.record_injected(1000)
    report.record_delivered(900)
    report.record_drop('UnknownSender', 100)
    report.events = 42
    report.control_plane_calls = 0

    write_report(report, tmp_path / 'out')
    again = read_report(tmp_path / 'out')

    assert summary(again) == summary(report)
    assert again.flows == report.flows
    assert again.width_log == report.width_log
    assert again.switch_load == report.switch_load
    assert again.server_load == report.server_load
    lines = (tmp_path / 'out' / Constants.SUMMARY_FILE).read_text(encoding=Constants.UTF8).splitlines()
    assert lines[0] == 'scenario = unit'
    assert 'green_share_pct = 63.1746' in lines


def test_read_report_errors(tmp_path: Path) -> None:  # pylint: disable=unused-variable
    """Test missing and malformed result directories."""
    with pytest.raises(ReportError):
        read_report(tmp_path / 'nowhere')

    write_report(metrics(), tmp_path)
    (tmp_path / Constants.CSV_FLOWS).write_text('flow_id,start\nnot a number,0\n', encoding=Constants.UTF8)
    with pytest.raises(ReportError):
        read_report(tmp_path)

    write_report(metrics(), tmp_path)
    (tmp_path / Constants.CSV_DROPS).unlink()
    with pytest.raises(ReportError):
        read_report(tmp_path)


@pytest.fixture(scope='module')
def consolidation_runs() -> tuple[MetricsReport, MetricsReport]:
    """Run the bundled daily load scenario under both policies."""
    scenario = load_scenario(Constants.SCENARIOS_PATH / f'consolidation{Constants.SCENARIO_SUFFIX}')
    return run(scenario), run(scenario, policy=Policy.PINNED_ECMP)


def test_consolidation_headline(consolidation_runs: tuple[MetricsReport, MetricsReport]) -> None:  # pylint: disable=unused-variable
    """Test the aggregation switch operation time reduction over a day."""
    report, baseline = consolidation_runs

    reduction = switch_hour_reduction(report, baseline)

    assert 36.0 <= reduction.percent <= 70.0  # noqa: PLR2004
    assert report.control_plane_calls == baseline.control_plane_calls == 0
    assert conservation_holds(report)
    assert conservation_holds(baseline)
    assert report.affinity_violations == 0
    assert {after for _, switch, _, _, after in report.width_log if switch == 'core'} == {1, 2, 3}


def test_consolidation_width_log(consolidation_runs: tuple[MetricsReport, MetricsReport]) -> None:  # pylint: disable=unused-variable
    """Test that every width change follows the thresholds."""
    report, _ = consolidation_runs
    thresholds = (10240, 20480)

    for _, _, traffic, _, after in report.width_log:
        assert after == 1 + sum(traffic > threshold for threshold in thresholds)


@pytest.fixture(scope='module')
def greenlb_run() -> MetricsReport:
    """Run the bundled solar trace scenario."""
    return run(load_scenario(Constants.SCENARIOS_PATH / f'greenlb{Constants.SCENARIO_SUFFIX}'))


def test_green_share_headline(greenlb_run: MetricsReport) -> None:  # pylint: disable=unused-variable
    """Test the share of traffic sent to the greener server."""
    assert 41.0 <= green_share(greenlb_run) <= 51.0  # noqa: PLR2004
    assert greenlb_run.affinity_violations == 0
    assert greenlb_run.control_plane_calls == 0


@pytest.mark.parametrize(('start', 'end', 'server', 'low', 'high'), [
    (0.0, 5.0, 's1', 47.0, 53.0),
    (5.0, 13.0, 's1', 64.0, 74.0),
    (13.0, 22.0, 's2', 63.0, 73.0),
    (22.0, 24.0, 's1', 47.0, 53.0),
])
def test_interval_splits(greenlb_run: MetricsReport, start: float, end: float, server: str, low: float, high: float) -> None:  # pylint: disable=unused-variable
    """Test how the load splits between both servers along the day."""
    assert low <= interval_share(greenlb_run, start, end)[server] <= high


def test_identical_result_files(scenario_file: Callable[..., Path], tmp_path: Path) -> None:  # pylint: disable=unused-variable
    """Test that two runs with the same seed write byte-identical result files."""
    traffic = SMALL_TRAFFIC.format(rate=6, request_packets='1, 4', think_time=0.1)
    scenario = load_scenario(scenario_file(trace1='0:0, 12:40', day_length='20', duration='20', report_period='2', extra=traffic))

    write_report(run(scenario), tmp_path / 'first')
    write_report(run(scenario), tmp_path / 'second')

    first = sorted(path.name for path in (tmp_path / 'first').iterdir())
    assert first == sorted(path.name for path in (tmp_path / 'second').iterdir())
    assert Constants.CSV_FLOWS in first
    for name in first:
        assert (tmp_path / 'first' / name).read_bytes() == (tmp_path / 'second' / name).read_bytes()


def test_day_compression_reduction(consolidation_runs: tuple[MetricsReport, MetricsReport], tmp_path: Path) -> None:  # pylint: disable=unused-variable
    """Test that compressing the day into half the time keeps the derived ratios."""
    text = (Constants.SCENARIOS_PATH / f'consolidation{Constants.SCENARIO_SUFFIX}').read_text(encoding=Constants.UTF8)
    text = text.replace('duration = 600\n', 'duration = 300\n').replace('day_length = 600\n', 'day_length = 300\n')
    path = tmp_path / f'compressed{Constants.SCENARIO_SUFFIX}'
    path.write_text(text, encoding=Constants.UTF8)
    scenario = load_scenario(path)
    report, baseline = consolidation_runs

    compressed = run(scenario)
    compressed_baseline = run(scenario, policy=Policy.PINNED_ECMP)

    assert compressed.day_length == 300.0  # noqa: PLR2004
    assert len(compressed.flows) < len(report.flows)
    expected = switch_hour_reduction(report, baseline).percent
    assert switch_hour_reduction(compressed, compressed_baseline).percent == pytest.approx(expected, abs=5.0)
    assert reduction_vs_always_on(compressed).percent == pytest.approx(reduction_vs_always_on(report).percent, abs=5.0)


def test_day_compression_green_share(scenario_file: Callable[..., Path]) -> None:  # pylint: disable=unused-variable
    """Test that the green share does not depend on how long the simulated day lasts."""
    traffic = SMALL_TRAFFIC.format(rate=30, request_packets='1, 3', think_time=0)
    shares = []
    for day_length in ('48', '96'):
        report = run(load_scenario(scenario_file(trace1='0:0, 12:40', day_length=day_length, duration=day_length, extra=traffic)))
        assert interval_share(report, 13.0, 24.0) == {'s1': 100.0}
        shares.append(green_share(report))

    assert 43.0 <= shares[0] <= 57.0  # noqa: PLR2004
    assert shares[0] == pytest.approx(shares[1], abs=7.0)
