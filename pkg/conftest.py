#! /usr/bin/env python3
"""Configuration file for pytest."""
from collections.abc import Callable, Generator
from pathlib import Path
from typing import NamedTuple

import pytest

from common import Constants


class LogPaths(NamedTuple):
    """Log paths abstraction."""  # noqa: D204
    log: Path
    debug: Path


@pytest.fixture()
def log_paths(tmp_path: Path) -> Generator[LogPaths, None, None]:  # pylint: disable=unused-variable
    """Generate temporary filenames for logging files."""
    logfile_path = tmp_path / 'log.txt'
    debugfile_path = tmp_path / 'debug.txt'

    yield LogPaths(logfile_path, debugfile_path)

    logfile_path.unlink(missing_ok=True)
    debugfile_path.unlink(missing_ok=True)


# Smallest useful fabric: one core, two aggregation switches, one access
# switch with two servers and a client. Placeholders allow tests to tweak it.
SMALL_SCENARIO = """
[scenario]
schema = 1
name = small
seed = {seed}
duration = {duration}
day_length = {day_length}
link_delay = 0.001
epoch_length = 1
thresholds = {thresholds}

[client]
type = client
ports = core
ip = 192.0.2.10

[core]
type = core
ports = client, agg1, agg2
uplinks = agg1, agg2
external = client

[agg1]
type = aggregation
ports = core, access1

[agg2]
type = aggregation
ports = core, access1

[access1]
type = access
ports = agg1, agg2, s1, s2
uplinks = agg1, agg2
subnet = 10.0.1
vip = 10.0.1.100

[s1]
type = server
ports = access1
ip = 10.0.1.1
trace = {trace1}
report_period = {report_period}

[s2]
type = server
ports = access1
ip = 10.0.1.2
trace = {trace2}
report_period = {report_period}
{extra}
"""
SMALL_SCENARIO_DEFAULTS = {
    'seed': '1',
    'duration': '10',
    'day_length': '86400',
    'thresholds': '10240',
    'trace1': '0:0',
    'trace2': '0:0',
    'report_period': '0',
    'extra': '',
}
SMALL_TRAFFIC = """
[traffic]
client = client
rates = 0:{rate}
request_packets = {request_packets}
request_payload = 100
response_payload = 300
think_time = {think_time}
"""


@pytest.fixture()
def scenario_file(tmp_path: Path) -> Callable[..., Path]:  # pylint: disable=unused-variable
    """Return a factory writing scenario text into a temporary file.

    The factory takes either the whole text or keyword overrides for the
    placeholders of SMALL_SCENARIO.
    """
    def factory(text: str | None = None, **overrides: str) -> Path:
        if text is None:
            text = SMALL_SCENARIO.format(**(SMALL_SCENARIO_DEFAULTS | overrides))
        path = tmp_path / f'test{Constants.SCENARIO_SUFFIX}'
        path.write_text(text, encoding=Constants.UTF8)
        return path
    return factory


@pytest.fixture()
def bundled_scenario() -> Callable[[str], Path]:  # pylint: disable=unused-variable
    """Return a function mapping a bundled scenario name to its path."""
    def resolve(name: str) -> Path:
        return Constants.SCENARIOS_PATH / f'{name}{Constants.SCENARIO_SUFFIX}'
    return resolve
