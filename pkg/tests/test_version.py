#! /usr/bin/env python3
"""Test suite for the version string and the places where it shows up."""
import re

import pytest

from common import Constants, Messages
from version import DEVELOPMENT_MODE, SEMVER, V_MAJOR, V_MINOR, V_PATCH, V_PRERELEASE

# MAJOR.MINOR.PATCH, then an optional prerelease and an optional build, as
# described at https://semver.org/ but without named capturing groups.
SEMVER_REGEX = r"""^
    (?:0|[1-9]\d*)\.(?:0|[1-9]\d*)\.(?:0|[1-9]\d*)
    (?:-(?:(?:0|[1-9]\d*|\d*[a-zA-Z-][0-9a-zA-Z-]*)(?:\.(?:0|[1-9]\d*|\d*[a-zA-Z-][0-9a-zA-Z-]*))*))?
    (?:\+(?:[0-9a-zA-Z-]+(?:\.[0-9a-zA-Z-]+)*))?
$"""


def test_semver() -> None:  # pylint: disable=unused-variable
    """Test that the version string is a semantic version built from its parts."""
    assert re.fullmatch(SEMVER_REGEX, SEMVER, re.ASCII | re.VERBOSE) is not None
    assert SEMVER.startswith(f'{V_MAJOR}.{V_MINOR}.{V_PATCH}')
    assert ('-' in SEMVER) == bool(V_PRERELEASE)


def test_release_is_not_development() -> None:  # pylint: disable=unused-variable
    """Test that release builds always write timestamped log files."""
    if V_PRERELEASE:
        pytest.skip('prerelease build')
    assert not DEVELOPMENT_MODE
    assert Constants.LOGFILE_PATH.name == f'greenfabric_log{Constants.TIMESTAMP_STEM}{Constants.TEXTFILE_SUFFIX}'
    assert Constants.DEBUGFILE_PATH.name == f'greenfabric_debug{Constants.TIMESTAMP_STEM}{Constants.TEXTFILE_SUFFIX}'


def test_banner_and_signature() -> None:  # pylint: disable=unused-variable
    """Test the banner printed at start and the signature written to the debug file."""
    assert Messages.APP_BANNER == f'greenfabric version {SEMVER}'
    name, rest = Constants.APP_SIGNATURE.split('/', maxsplit=1)
    assert name == Constants.APP_NAME == 'greenfabric'
    assert rest.startswith(f'{SEMVER} (')
    assert rest.endswith(')')
    assert rest[len(SEMVER) + 2:-1].count(';') == 2  # noqa: PLR2004
