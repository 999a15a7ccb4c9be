#! /usr/bin/env python3
"""Test suite for the building script."""
from pathlib import Path
from zipfile import ZipFile

import pytest

from build import (
    bundled_scenarios,
    check_scenarios,
    package_members,
    parse_requirements,
    pyinstaller_arguments,
    Requirement,
    REQUIREMENTS_PATH,
    unmet_requirements,
    version_key,
    write_package,
)
from common import Constants


def test_parse_requirements() -> None:  # pylint: disable=unused-variable
    """Test requirement parsing, comments and blank lines included."""
    text = '# Latest versions which worked.\nsimpy>=4.1\n\nnetworkx >= 3.2  # graphs\npytest\n'

    assert parse_requirements(text) == [
        Requirement('simpy', '4.1'),
        Requirement('networkx', '3.2'),
        Requirement('pytest', None),
    ]
    with pytest.raises(ValueError, match='numpy<2'):
        parse_requirements('numpy<2\n')


def test_project_requirements() -> None:  # pylint: disable=unused-variable
    """Test that the project requirements parse and name the simulation stack."""
    names = {requirement.name for requirement in parse_requirements(REQUIREMENTS_PATH.read_text(encoding=Constants.UTF8))}

    assert {'simpy', 'networkx', 'numpy', 'pyinstaller', 'pytest'} <= names


def test_unmet_requirements() -> None:  # pylint: disable=unused-variable
    """Test missing and outdated packages."""
    requirements = [Requirement('simpy', '4.1'), Requirement('numpy', '1.26'), Requirement('networkx', None)]

    assert unmet_requirements(requirements, {'simpy': '4.1.1', 'numpy': '2.0.0', 'networkx': '3.0'}) == []
    assert unmet_requirements(requirements, {'simpy': '4.0.2', 'numpy': None, 'networkx': '3.0'}) == [
        'simpy: 4.0.2 installed, 4.1 needed',
        'numpy: not installed',
    ]
    assert version_key('1.26.4rc1') == (1, 26, 4)
    assert version_key('dev') == ()


def test_pyinstaller_arguments() -> None:  # pylint: disable=unused-variable
    """Test that the executable is named after the application and frozen from its entry point."""
    arguments = pyinstaller_arguments()

    assert '--onefile' in arguments
    assert f'--name={Constants.APP_NAME}' in arguments
    assert arguments[-1] == str(Constants.ROOT_PATH / f'{Constants.APP_NAME}.py')


def test_bundled_scenarios_check(capsys: pytest.CaptureFixture[str]) -> None:  # pylint: disable=unused-variable
    """Test that every bundled scenario passes the pre-build check."""
    scenarios = bundled_scenarios()

    assert [path.stem for path in scenarios] == ['consolidation', 'fig3', 'greenlb']
    assert check_scenarios(scenarios)
    assert not check_scenarios([])
    capsys.readouterr()


def test_broken_scenario_stops_build(tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:  # pylint: disable=unused-variable
    """Test that a broken scenario fails the pre-build check."""
    broken = tmp_path / f'broken{Constants.SCENARIO_SUFFIX}'
    broken.write_text('[scenario]\nschema = 2\n', encoding=Constants.UTF8)

    assert not check_scenarios([*bundled_scenarios(), broken])
    capsys.readouterr()


def test_package_layout(tmp_path: Path) -> None:  # pylint: disable=unused-variable
    """Test that scenarios go into a directory next to the executable."""
    executable = tmp_path / Constants.APP_NAME
    executable.write_bytes(b'\x7fELF')
    destination = tmp_path / 'package.zip'

    write_package(package_members(executable, bundled_scenarios()), destination)

    with ZipFile(destination) as bundle:
        names = sorted(bundle.namelist())
    assert names == [
        'README.md',
        Constants.APP_NAME,
        'scenarios/consolidation.scenario',
        'scenarios/fig3.scenario',
        'scenarios/greenlb.scenario',
    ]
