#! /usr/bin/env python3
"""See "README.md" for details."""
import argparse
from collections.abc import Callable
import errno
from functools import wraps
import logging
from pathlib import Path
import sys
import traceback as tb
from types import TracebackType
from typing import NoReturn

from common import (
    Constants,
    error,
    ExitCodes,
    logger,
    Messages,
    ReportError,
    ScenarioError,
    UsageError,
    warning,
)
from control import load_scenario, Policy, Scenario
from harness import (
    conservation_holds,
    energy_saving_estimate,
    read_report,
    summary,
    switch_hour_reduction,
    write_report,
)
from simkernel import run


class ArgumentParser(argparse.ArgumentParser):
    """Argument parser which raises instead of exiting on errors."""

    def error(self, message: str) -> NoReturn:
        """Raise UsageError with message."""
        raise UsageError(Messages.USAGE_ERROR.format(message))


def excepthook(exc_type: type[BaseException], exc_value: BaseException, exc_traceback: TracebackType | None) -> None:
    """Handle unhandled exceptions, default exception hook."""
    if isinstance(exc_value, OSError):
        message = Messages.UNEXPECTED_OSERROR
        try:
            errno_message = errno.errorcode[exc_value.errno or 0]
        except (IndexError, KeyError):
            errno_message = Messages.OSERROR_DETAIL_NA
        details = Messages.OSERROR_DETAILS.format(
            exc_type.__name__,
            errno_message,
            exc_value.strerror,
            Messages.OSERROR_DETAIL_NA if exc_value.filename is None else exc_value.filename,
            Messages.OSERROR_DETAIL_NA if exc_value.filename2 is None else exc_value.filename2,
        )
    else:
        message = Messages.UNHANDLED_EXCEPTION
        args = ''
        for arg in exc_value.args:
            args += Messages.EXCEPTION_DETAILS_ARG.format(type(arg).__name__, arg)
        details = Messages.EXCEPTION_DETAILS.format(exc_type.__name__, str(exc_value), args)
    current_filename = None
    traceback = ''
    for frame in tb.extract_tb(exc_traceback):
        if current_filename != frame.filename:
            traceback += Messages.TRACEBACK_FRAME_HEADER.format(frame.filename)
            current_filename = frame.filename
        frame.name = Constants.APP_NAME if frame.name == Messages.TRACEBACK_TOPLEVEL_FRAME else frame.name
        traceback += Messages.TRACEBACK_FRAME_LINE.format(frame.lineno, frame.name, frame.line)
    details += Messages.TRACEBACK_HEADER.format(traceback) if traceback else ''
    error(message, details)


def loggerize(function: Callable[..., ExitCodes]) -> Callable[..., ExitCodes]:
    """Decorate function so it gets logging enabled."""
    @wraps(function)
    def loggerize_wrapper(*args: str) -> ExitCodes:
        logger.config(logfile=Constants.LOGFILE_PATH, debugfile=Constants.DEBUGFILE_PATH)

        logger.debug(Messages.DEBUGGING_INIT)
        logger.info(Messages.APP_BANNER)
        logger.debug(Constants.APP_SIGNATURE)

        status = function(*args)

        logger.info(Messages.PROCESS_DONE)
        logger.debug(Messages.DEBUGGING_DONE)
        logging.shutdown()
        return status
    return loggerize_wrapper


def keyboard_interrupt_handler(function: Callable[..., ExitCodes]) -> Callable[..., ExitCodes]:
    """Decorate function so it handles KeyboardInterrupt gracefully."""
    @wraps(function)
    def handle_keyboard_interrupt_wrapper(*args: str) -> ExitCodes:
        try:
            return function(*args)
        except KeyboardInterrupt:
            warning(Messages.KEYBOARD_INTERRUPT)
            return ExitCodes.KEYBOARD_INTERRUPT
    return handle_keyboard_interrupt_wrapper


def build_argument_parser() -> ArgumentParser:
    """Build the command line parser and its sub-commands."""
    parser = ArgumentParser(prog=Constants.APP_NAME, description=Messages.CLI_DESCRIPTION)
    commands = parser.add_subparsers(dest='command', required=True)

    run_parser = commands.add_parser('run', help=Messages.CLI_RUN_HELP)
    run_parser.add_argument('scenario', type=Path, help=Messages.CLI_SCENARIO_HELP)
    run_parser.add_argument('--seed', type=int, help=Messages.CLI_SEED_HELP)
    run_parser.add_argument('--until', type=float, help=Messages.CLI_UNTIL_HELP)
    run_parser.add_argument('--out', type=Path, default=Constants.DEFAULT_OUTPUT_PATH, help=Messages.CLI_OUT_HELP)

    validate_parser = commands.add_parser('validate', help=Messages.CLI_VALIDATE_HELP)
    validate_parser.add_argument('scenario', type=Path, help=Messages.CLI_SCENARIO_HELP)

    compare_parser = commands.add_parser('compare', help=Messages.CLI_COMPARE_HELP)
    compare_parser.add_argument('scenario', type=Path, help=Messages.CLI_SCENARIO_HELP)
    compare_parser.add_argument('--seed', type=int, help=Messages.CLI_SEED_HELP)
    compare_parser.add_argument('--until', type=float, help=Messages.CLI_UNTIL_HELP)

    report_parser = commands.add_parser('report', help=Messages.CLI_REPORT_HELP)
    report_parser.add_argument('directory', type=Path, help=Messages.CLI_DIR_HELP)

    return parser


def print_summary(figures: dict[str, str]) -> None:
    """Log the summary figures, one per line."""
    logger.info(Messages.SUMMARY_HEADING)
    logger.indent()
    for key, value in figures.items():
        logger.info(Messages.SUMMARY_LINE.format(key, value))
    logger.dedent()


def resolve_scenario(path: Path) -> Path:
    """Return path, or the bundled scenario with that file name if path does not exist."""
    bundled = Constants.SCENARIOS_PATH / path.name
    if not path.exists() and len(path.parts) == 1 and bundled.is_file():
        return bundled
    return path


def validate_command(scenario: Scenario) -> ExitCodes:
    """Report a valid scenario."""
    logger.info(Messages.SCENARIO_VALID.format(
        scenario.name,
        sum(1 for _ in scenario.switches()),
        sum(1 for _ in scenario.hosts()),
        len(scenario.links()),
    ))
    return ExitCodes.SUCCESS


def run_command(scenario: Scenario, seed: int | None, until: float | None, out: Path) -> ExitCodes:
    """Run scenario and write its metrics into out."""
    report = run(scenario, until=until, seed=seed)
    logger.info(Messages.WRITING_RESULTS.format(out))
    write_report(report, out)
    print_summary(summary(report))
    if not conservation_holds(report):
        error(Messages.CONSERVATION_BROKEN.format(report.injected_bytes, report.delivered_bytes, report.dropped_bytes))
        return ExitCodes.ERROR
    if not report.flows:
        warning(Messages.NO_FLOWS)
        return ExitCodes.WARNING
    return ExitCodes.SUCCESS


def compare_command(scenario: Scenario, seed: int | None, until: float | None) -> ExitCodes:
    """Run scenario under both policies and report the operation time reduction."""
    report = run(scenario, until=until, seed=seed, policy=Policy.CONSOLIDATING)
    baseline = run(scenario, until=until, seed=seed, policy=Policy.PINNED_ECMP)
    reduction = switch_hour_reduction(report, baseline)
    logger.info(Messages.COMPARE_HEADING)
    logger.indent()
    logger.info(Messages.COMPARE_LINE.format(reduction.percent, reduction.active, reduction.reference))
    logger.info(Messages.ENERGY_LINE.format(
        scenario.report.switches,
        scenario.report.switch_power,
        energy_saving_estimate(reduction.percent / 100, scenario.report.switches, scenario.report.switch_power),
    ))
    logger.dedent()
    if reduction.no_traffic:
        warning(Messages.NO_TRAFFIC)
        return ExitCodes.WARNING
    return ExitCodes.SUCCESS


def report_command(directory: Path) -> ExitCodes:
    """Derive the summary again from a result directory."""
    logger.info(Messages.READING_RESULTS.format(directory))
    print_summary(summary(read_report(directory)))
    return ExitCodes.SUCCESS


@loggerize
@keyboard_interrupt_handler
def main(*args: str) -> ExitCodes:
    """."""
    try:
        arguments = build_argument_parser().parse_args(args)
    except UsageError as exc:
        error(str(exc))
        return ExitCodes.USAGE_ERROR
    except SystemExit as exc:
        return ExitCodes.SUCCESS if not exc.code else ExitCodes.USAGE_ERROR

    try:
        if arguments.command == 'report':
            return report_command(arguments.directory)
        path = resolve_scenario(arguments.scenario)
        logger.info(Messages.LOADING_SCENARIO.format(path))
        scenario = load_scenario(path)
        match arguments.command:
            case 'validate':
                return validate_command(scenario)
            case 'compare':
                return compare_command(scenario, arguments.seed, arguments.until)
            case _:
                return run_command(scenario, arguments.seed, arguments.until, arguments.out)
    except (FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        error(Messages.FILE_ERROR.format(exc.filename))
        return ExitCodes.FILE_ERROR
    except ReportError as exc:
        error(str(exc), str(exc.details) if exc.details else '')
        return ExitCodes.FILE_ERROR
    except ScenarioError as exc:
        error(str(exc), str(exc.details) if exc.details else '')
        return ExitCodes.SCENARIO_ERROR


if __name__ == '__main__':
    sys.excepthook = excepthook
    sys.exit(main(*sys.argv[1:]))
