"""Build a distributable greenfabric package.

The package is a ZIP file holding the one-file executable frozen by
PyInstaller, the bundled scenarios in a `scenarios` directory next to it,
where the executable looks for them, and the README. Every bundled scenario
is loaded and installed before freezing, so a broken one stops the build.
"""
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
import re
import sys
from typing import NamedTuple
from zipfile import ZIP_DEFLATED, ZipFile

import PyInstaller.__main__

from common import Constants, error, logger, ScenarioError
from control import install, load_scenario
from version import SEMVER

ENTRY_POINT = Constants.ROOT_PATH / f'{Constants.APP_NAME}.py'
VENV_PATH = Constants.ROOT_PATH / '.venv'
BUILD_PATH = Constants.ROOT_PATH / 'build'
DIST_PATH = BUILD_PATH / 'dist'
REQUIREMENTS_PATH = Constants.ROOT_PATH / 'requirements.txt'
README_PATH = Constants.ROOT_PATH / 'README.md'
EXECUTABLE_NAME = f'{Constants.APP_NAME}.exe' if sys.platform == 'win32' else Constants.APP_NAME
PACKAGE_NAME = f'{Constants.APP_NAME}_v{SEMVER.split("+")[0]}.zip'
REQUIREMENT_REGEX = re.compile(r'^\s*([A-Za-z0-9_.-]+)\s*(?:>=\s*([0-9][0-9A-Za-z.]*))?\s*$')


class Requirement(NamedTuple):
    """A package name with its minimum version, if any."""  # noqa: D204
    name: str
    minimum: str | None


def version_key(text: str) -> tuple[int, ...]:
    """Turn the leading numeric release of a version string into a comparable tuple."""
    release = re.match(r'\d+(?:\.\d+)*', text)
    return tuple(int(part) for part in release.group().split('.')) if release else ()


def parse_requirements(text: str) -> list[Requirement]:
    """Parse requirements.txt contents; comments and blank lines are skipped."""
    requirements = []
    for line in text.splitlines():
        line = line.split('#', maxsplit=1)[0]  # noqa: PLW2901
        if not line.strip():
            continue
        if (match := REQUIREMENT_REGEX.match(line)) is None:
            raise ValueError(f'Unsupported requirement «{line.strip()}».')
        requirements.append(Requirement(match.group(1), match.group(2)))
    return requirements


def unmet_requirements(requirements: list[Requirement], installed: dict[str, str | None]) -> list[str]:
    """Return a description of every requirement not satisfied by installed versions."""
    unmet = []
    for requirement in requirements:
        current = installed.get(requirement.name)
        if current is None:
            unmet.append(f'{requirement.name}: not installed')
        elif requirement.minimum and version_key(current) < version_key(requirement.minimum):
            unmet.append(f'{requirement.name}: {current} installed, {requirement.minimum} needed')
    return unmet


def installed_versions(requirements: list[Requirement]) -> dict[str, str | None]:
    """Return the installed version of each required package, None when missing."""
    versions: dict[str, str | None] = {}
    for requirement in requirements:
        try:
            versions[requirement.name] = version(requirement.name)
        except PackageNotFoundError:
            versions[requirement.name] = None
    return versions


def check_environment() -> bool:
    """Check that an existing project virtual environment is the running one."""
    logger.info(f'Checking the Python environment, {sys.prefix}')
    if VENV_PATH.exists() and Path(sys.prefix).resolve() != VENV_PATH.resolve():
        error(f'The virtual environment at {VENV_PATH} exists but is not active.')
        return False
    return True


def check_requirements() -> bool:
    """Check that every package in requirements.txt is installed and recent enough."""
    logger.info('Checking required packages')
    requirements = parse_requirements(REQUIREMENTS_PATH.read_text(encoding=Constants.UTF8))
    if unmet := unmet_requirements(requirements, installed_versions(requirements)):
        error('Some required packages are missing or outdated.', '\n'.join(unmet))
        return False
    return True


def bundled_scenarios() -> list[Path]:
    """Return the bundled scenario files, sorted by name."""
    return sorted(Constants.SCENARIOS_PATH.glob(f'*{Constants.SCENARIO_SUFFIX}'))


def check_scenarios(paths: list[Path]) -> bool:
    """Load and install every scenario in paths, reporting the broken ones."""
    logger.info('Checking bundled scenarios')
    logger.indent()
    broken = False
    for path in paths:
        try:
            states = install(load_scenario(path))
        except ScenarioError as exc:
            error(f'Bundled scenario «{path.name}» is broken: {exc}', str(exc.details or ''))
            broken = True
        else:
            logger.info(f'{path.name}: {len(states)} switches')
    logger.dedent()
    return bool(paths) and not broken


def pyinstaller_arguments() -> list[str]:
    """Return the PyInstaller command line for a one-file greenfabric executable."""
    return [
        '--noconfirm',
        '--log-level=WARN',
        '--onefile',
        f'--name={Constants.APP_NAME}',
        f'--workpath={BUILD_PATH}',
        f'--specpath={BUILD_PATH}',
        f'--distpath={DIST_PATH}',
        str(ENTRY_POINT),
    ]


def freeze() -> Path | None:
    """Freeze the entry point, returning the executable path, or None on failure."""
    logger.info(f'Freezing {ENTRY_POINT.name} into {DIST_PATH / EXECUTABLE_NAME}')
    try:
        PyInstaller.__main__.run(pyinstaller_arguments())
    except SystemExit as exc:
        if exc.code:
            error('PyInstaller could not freeze the executable.', str(exc.code))
            return None
    executable = DIST_PATH / EXECUTABLE_NAME
    if not executable.is_file():
        error(f'PyInstaller did not produce {executable}.')
        return None
    return executable


def package_members(executable: Path, scenarios: list[Path]) -> list[tuple[Path, str]]:
    """Return every file going into the package, paired with its name inside it."""
    members = [(executable, executable.name), (README_PATH, README_PATH.name)]
    members.extend((scenario, f'{Constants.SCENARIOS_PATH.name}/{scenario.name}') for scenario in scenarios)
    return members


def write_package(members: list[tuple[Path, str]], destination: Path) -> None:
    """Write members into the ZIP file at destination."""
    logger.info(f'Packing {destination.name}')
    with ZipFile(destination, 'w', compression=ZIP_DEFLATED, compresslevel=9) as bundle:
        for path, name in members:
            bundle.write(path, name)


def main() -> int:
    """Run every build step, stopping at the first failing one."""
    logger.config()
    logger.info(f'Building {Constants.APP_NAME} {SEMVER}')
    logger.indent()
    scenarios = bundled_scenarios()
    if not (check_environment() and check_requirements() and check_scenarios(scenarios)):
        return 1
    if (executable := freeze()) is None:
        return 1
    write_package(package_members(executable, scenarios), Constants.ROOT_PATH / PACKAGE_NAME)
    logger.set_indent(0)
    logger.info(f'Package {PACKAGE_NAME} built.')
    return 0


if __name__ == '__main__':
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        sys.exit(1)
