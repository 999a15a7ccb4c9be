"""Shared application scaffolding: constants, messages, logging and errors."""
from enum import IntEnum, StrEnum
from io import TextIOWrapper
import logging
from logging.config import dictConfig
from pathlib import Path
import platform
import sys
import time
from typing import Any, cast, LiteralString

from version import DEVELOPMENT_MODE, SEMVER


class Constants:  # pylint: disable=too-few-public-methods
    """Application configuration values."""

    APP_NAME = 'greenfabric'
    APP_PLATFORM = f'{platform.system()} {platform.release()};{platform.architecture()[0]};{platform.machine()}'
    APP_SIGNATURE = f'{APP_NAME}/{SEMVER} ({APP_PLATFORM})'

    UTF8 = 'utf-8'
    LIST_SEPARATOR = ','
    PAIR_SEPARATOR = ':'
    RANGE_SEPARATOR = '-'
    OUTPUT_SEPARATOR = ', '

    ERROR_MARKER = '*** '
    ERROR_PAYLOAD_INDENT = len(ERROR_MARKER)

    TIMESTAMP_FORMAT = '%Y%m%d_%H%M%S'
    TIMESTAMP_STEM = time.strftime(f'_{TIMESTAMP_FORMAT}')
    TEXTFILE_SUFFIX = '.txt'
    SCENARIO_SUFFIX = '.scenario'

    ROOT_PATH = Path(sys.executable if getattr(sys, 'frozen', False) else __file__).resolve().parent
    SCENARIOS_PATH = ROOT_PATH / 'scenarios'
    DEFAULT_OUTPUT_PATH = Path('greenfabric_out')

    LOGFILE_PATH = ROOT_PATH / f'{APP_NAME}_log{"" if DEVELOPMENT_MODE else TIMESTAMP_STEM}{TEXTFILE_SUFFIX}'
    DEBUGFILE_PATH = ROOT_PATH / f'{APP_NAME}_debug{"" if DEVELOPMENT_MODE else TIMESTAMP_STEM}{TEXTFILE_SUFFIX}'

    LOGGING_INDENTCHAR = ' '
    LOGGING_FORMAT_STYLE = '{'
    LOGGING_LEVELNAME_MAX_LEN = len(max(logging.getLevelNamesMapping(), key=len))
    LOGGING_LEVELNAME_SEPARATOR = '| '
    LOGGING_DEBUGFILE_FORMAT = (
        '{asctime}.{msecs:04.0f} '
        f'{{levelname:{LOGGING_LEVELNAME_MAX_LEN}}}'
        f'{LOGGING_LEVELNAME_SEPARATOR}'
        '{message}'
    )
    LOGGING_FALLBACK_FORMAT = '{message}'
    LOGGING_LOGFILE_FORMAT = '{asctime} {message}'
    LOGGING_CONSOLE_FORMAT = '{message}'

    SCENARIO_SCHEMA_VERSION = 1

    CSV_SWITCH_LOAD = 'switch_load.csv'
    CSV_WIDTH_LOG = 'width_log.csv'
    CSV_SERVER_LOAD = 'server_load.csv'
    CSV_INDICES = 'indices.csv'
    CSV_FLOWS = 'flows.csv'
    CSV_DROPS = 'drops.csv'
    CSV_META = 'meta.csv'
    SUMMARY_FILE = 'summary.txt'
    SUMMARY_PAIR = '{} = {}\n'
    SUMMARY_FLOAT_FORMAT = '{:.4f}'


class Messages(StrEnum):
    """Messages."""

    KEYBOARD_INTERRUPT = 'The user interrupted the application.'

    DEBUGGING_INIT = 'Debug log started.'
    APP_BANNER = f'{Constants.APP_NAME} version {SEMVER}'
    PROCESS_DONE = '\nProcess finished.'
    DEBUGGING_DONE = 'Debug log finished.'

    ERROR_HEADER = f'\n{Constants.ERROR_MARKER}Error in {Constants.APP_NAME}.\n'
    WARNING_HEADER = '* Warning: '
    ERROR_DETAILS_HEADING = '\nAdditional error information:'
    ERROR_DETAILS_PREAMBLE = '│ '
    ERROR_DETAILS_TAIL = '╰'

    UNEXPECTED_OSERROR = 'Unexpected operating system error.'
    OSERROR_DETAILS = (
        '     type = {}\n'
        '    errno = {}\n'
        ' strerror = {}\n'
        ' filename = {}\n'
        'filename2 = {}\n'
    )
    OSERROR_DETAIL_NA = '[Not available]'
    UNHANDLED_EXCEPTION = 'Unhandled exception.'
    EXCEPTION_DETAILS = 'type = {}\nvalue = {}\nargs: {}'
    EXCEPTION_DETAILS_ARG = '\n  [{}] {}'
    TRACEBACK_HEADER = '\n\ntraceback:\n{}'
    TRACEBACK_FRAME_HEADER = '▸ {}\n'
    TRACEBACK_FRAME_LINE = '  {}, {}: {}\n'
    TRACEBACK_TOPLEVEL_FRAME = '<module>'

    USAGE_ERROR = 'Wrong command line: {}'
    CLI_DESCRIPTION = 'Data center network simulator with in-switch traffic consolidation and green load balancing.'
    CLI_RUN_HELP = 'run a scenario and write metrics as CSV files'
    CLI_VALIDATE_HELP = 'check a scenario without running it'
    CLI_COMPARE_HELP = 'run a scenario and its pinned-ECMP baseline, print the reduction'
    CLI_REPORT_HELP = 'derive the summary again from the CSV files of a previous run'
    CLI_SCENARIO_HELP = 'scenario file, or the name of a bundled one'
    CLI_SEED_HELP = 'random seed, overrides the scenario seed'
    CLI_UNTIL_HELP = 'simulated duration in seconds, overrides the scenario duration'
    CLI_OUT_HELP = 'output directory for the CSV files and the summary'
    CLI_DIR_HELP = 'directory written by a previous run'

    FILE_ERROR = 'Cannot access file «{}».'
    LOADING_SCENARIO = 'Loading scenario from «{}».'
    SCENARIO_PARSE_ERROR = 'Syntax error «{}» reading the scenario file.'
    SCENARIO_INVALID = 'The scenario is not valid.'
    SCENARIO_LOCATION = 'Section [{}], key «{}»: {}'
    SCENARIO_VALID = 'Scenario «{}» is valid: {} switches, {} hosts, {} links.'
    SCHEMA_UNSUPPORTED = 'unsupported schema version {}, expected {}'
    MISSING_KEY = 'missing mandatory key'
    MISSING_SECTION = 'missing mandatory section'
    BAD_NUMBER = 'not a valid number «{}»'
    BAD_ADDRESS = 'not a valid address «{}»'
    BAD_MAC = 'not a valid MAC address «{}»'
    BAD_PAIR = 'not a valid «hour:value» pair «{}»'
    BAD_RANGE = 'not a valid «start-end» hour range «{}»'
    BAD_NODE_TYPE = 'unknown node type «{}»'
    UNKNOWN_NODE = 'unknown node «{}»'
    NOT_POSITIVE = 'must be positive'
    NOT_ASCENDING = 'thresholds not strictly ascending: {}'
    WRONG_THRESHOLD_COUNT = 'expected {} thresholds (one less than uplinks), got {}'
    TRACE_NOT_ASCENDING = 'samples not ascending within 0-24 h'
    INDEX_RANGE = 'availability index {} outside 0-255'
    NEGATIVE_RATE = 'negative flow rate {}'
    SERVER_ID_OVERFLOW = '{} servers behind one virtual IP, 3-bit server ID overflow (at most 8)'
    NO_SERVERS = 'access switch without servers'
    NO_UPLINKS = 'uplinks must not be empty'
    UPLINK_NOT_A_PORT = 'uplink «{}» is not one of the ports'
    LINK_ASYMMETRIC = 'link to «{}» not declared back by «{}»'
    DUPLICATE_PORT = 'neighbour «{}» listed twice'
    HOST_PORTS = 'hosts have exactly one port'
    DUPLICATE_VIP = 'virtual IP {} already used by «{}»'
    DUPLICATE_ADDRESS = 'address {} already used by «{}»'
    VIP_OUTSIDE_SUBNET = 'virtual IP {} outside subnet {}'
    BAD_SUBNET = 'not a valid three-octet subnet «{}»'
    NO_CORE = 'exactly one core switch is needed, found {}'
    UNKNOWN_TARGET = 'target {} is not the virtual IP of any access switch'
    BAD_REQUEST_RANGE = 'request packet range {} is not «min, max» with 1 <= min <= max'

    INSTALLING = 'Installing initial state into {} switches ({} policy).'
    INSTALLED_SWITCH = 'Switch «{}» ({}): {} routes, {} Host_info entries, width {}.'
    RUNNING = 'Running scenario «{}» with seed {} until {} s.'
    RUN_DONE = 'Simulation finished at {:.3f} s after {} events.'
    WIDTH_CHANGE = '{:.3f} s, switch «{}»: traffic {} B, width {} -> {}.'
    PACKET_DROPPED = '{:.3f} s, switch «{}»: drop «{}» ({} B).'
    INFO_REPORT = 'Switch «{}»: server ID {} reports index {}.'

    WRITING_RESULTS = 'Writing results to «{}».'
    READING_RESULTS = 'Reading results from «{}».'
    MISSING_RESULT_FILE = 'Result file «{}» is missing or unreadable.'
    BAD_RESULT_FILE = 'Result file «{}» is malformed.'
    SUMMARY_HEADING = '\nSummary:'
    SUMMARY_LINE = '{} = {}'
    COMPARE_HEADING = '\nConsolidation vs. pinned ECMP:'
    COMPARE_LINE = 'Aggregation switch operation time reduced by {:.2f}% ({} vs. {} active windows).'
    ENERGY_LINE = 'Estimated saving for {} aggregation switches at {} Wh each: {:.1f} Wh.'
    NO_TRAFFIC = 'No traffic went through the aggregation switches, reduction reported as 0.'
    NO_FLOWS = 'No flow was opened during the run.'
    CONSERVATION_BROKEN = 'Conservation does not hold: {} B injected, {} B delivered, {} B dropped.'


class ExitCodes(IntEnum):
    """Standardized exit codes."""  # noqa: D204
    SUCCESS = 0
    USAGE_ERROR = 1
    WARNING = 2
    ERROR = 3
    FILE_ERROR = 4
    SCENARIO_ERROR = 5
    KEYBOARD_INTERRUPT = 127


# Needed for having VERY basic logging when the code is imported rather than run.
logging.basicConfig(
    level=logging.NOTSET,
    style=Constants.LOGGING_FORMAT_STYLE,
    format=Constants.LOGGING_FALLBACK_FORMAT,
    force=True,
)


# Reconfigure standard output streams so they use UTF-8 encoding, even if
# they are redirected to a file when running the application from a shell.
if sys.stdout and isinstance(sys.stdout, TextIOWrapper):
    sys.stdout.reconfigure(encoding=Constants.UTF8)
if sys.stderr and isinstance(sys.stderr, TextIOWrapper):
    sys.stderr.reconfigure(encoding=Constants.UTF8)


class CustomLogger(logging.Logger):
    """Custom logger with indentation support."""

    INCREASE_INDENT_SYMBOL = '+'
    DECREASE_INDENT_SYMBOL = '-'

    def __init__(self, name: str, level: int = logging.NOTSET) -> None:
        """Initialize logger with a name and a level."""
        super().__init__(name, level)
        self.indentlevel: int = 0
        self.indentation = ''

    def makeRecord(self, *args: Any, **kwargs: Any) -> logging.LogRecord:  # noqa: ANN401, N802
        """Create a new logging record with indentation support."""
        record = super().makeRecord(*args, **kwargs)
        record.msg = '\n'.join(f'{self.indentation}{line}'.rstrip() for line in str(record.msg).split('\n'))
        return record

    def _set_indentlevel(self, level: int | LiteralString) -> None:
        """Set current logging indentation level.

        If level is:
            - INCREASE_INDENT_SYMBOL string, indentation is increased.
            - DECREASE_INDENT_SYMBOL string, indentation is decreased.
            - any non-negative integer, indentation is set to that value.

        Not for public usage, use self.set_indent(level) instead.
        """
        if level == self.INCREASE_INDENT_SYMBOL:
            self.indentlevel += 1
        if level == self.DECREASE_INDENT_SYMBOL:
            self.indentlevel = max(0, self.indentlevel - 1)
        if isinstance(level, int) and level >= 0:
            self.indentlevel = level
        self.indentation = Constants.LOGGING_INDENTCHAR * self.indentlevel

    def set_indent(self, level: int) -> None:
        """Set current logging indentation level."""
        self._set_indentlevel(max(0, level))

    def indent(self) -> None:
        """Increment current logging indentation level."""
        self._set_indentlevel(self.INCREASE_INDENT_SYMBOL)

    def dedent(self) -> None:
        """Decrement current logging indentation level."""
        self._set_indentlevel(self.DECREASE_INDENT_SYMBOL)

    def config(self, *, logfile: str | Path | None = None, debugfile: str | Path | None = None) -> None:
        """Configure logger.

        With the default configuration ALL logging messages are sent to
        debugfile with a timestamp and some debugging information; those
        messages with severity of logging.INFO or higher are sent to logfile,
        also timestamped.

        In addition to that, messages with a severity of exactly logging.INFO
        are sent to the standard output stream, and messages with a severity of
        logging.WARNING or higher are sent to the standard error stream, without
        a timestamp in both cases.

        If debugfile or logfile are None (the default), then the corresponding
        files are not created and no logging message will go there.
        """
        class MultilineFormatter(logging.Formatter):
            """Simple custom formatter with multiline support."""  # noqa: D204
            def format(self, record: logging.LogRecord) -> str:
                """Format multiline records so they look like multiple records."""
                formatted_record = super().format(record)
                preamble = formatted_record[0:formatted_record.rfind(record.message)]
                return '\n'.join(f'{preamble}{line}'.rstrip() for line in record.message.split('\n'))

        logging_configuration: dict[str, Any] = {
            'version': 1,
            'disable_existing_loggers': False,
            'loggers': {
                self.name: {
                    'level': logging.NOTSET,
                    'propagate': False,
                    'handlers': [],
                },
            },
        }

        formatters = {}
        handlers = {}

        if debugfile:
            formatters['debugfile_formatter'] = {
                '()': MultilineFormatter,
                'style': Constants.LOGGING_FORMAT_STYLE,
                'format': Constants.LOGGING_DEBUGFILE_FORMAT,
                'datefmt': Constants.TIMESTAMP_FORMAT,
            }
            handlers['debugfile_handler'] = {
                'level': logging.NOTSET,
                'formatter': 'debugfile_formatter',
                'class': logging.FileHandler,
                'filename': debugfile,
                'mode': 'w',
                'encoding': Constants.UTF8,
            }

        if logfile:
            formatters['logfile_formatter'] = {
                '()': MultilineFormatter,
                'style': Constants.LOGGING_FORMAT_STYLE,
                'format': Constants.LOGGING_LOGFILE_FORMAT,
                'datefmt': Constants.TIMESTAMP_FORMAT,
            }
            handlers['logfile_handler'] = {
                'level': logging.INFO,
                'formatter': 'logfile_formatter',
                'class': logging.FileHandler,
                'filename': logfile,
                'mode': 'w',
                'encoding': Constants.UTF8,
            }

        formatters['console_formatter'] = {
            '()': MultilineFormatter,
            'style': Constants.LOGGING_FORMAT_STYLE,
            'format': Constants.LOGGING_CONSOLE_FORMAT,
        }
        handlers['stdout_handler'] = {
            'level': logging.NOTSET,
            'formatter': 'console_formatter',
            'filters': [lambda record: (record.levelno == logging.INFO)],  # type: ignore  # noqa: PGH003
            'class': logging.StreamHandler,
            'stream': sys.stdout,
        }
        handlers['stderr_handler'] = {
            'level': logging.WARNING,
            'formatter': 'console_formatter',
            'class': logging.StreamHandler,
            'stream': sys.stderr,
        }

        logging_configuration['formatters'] = formatters
        logging_configuration['handlers'] = handlers
        logging_configuration['loggers'][self.name]['handlers'] = handlers.keys()
        dictConfig(logging_configuration)
logging.setLoggerClass(CustomLogger)
logger: CustomLogger = cast(CustomLogger, logging.getLogger(Constants.APP_NAME))


class BaseApplicationError(Exception):
    """Base class for all custom application exceptions."""  # noqa: D204
    # pylint: disable-next=keyword-arg-before-vararg
    def __init__ (self, message: str = '', details: object = None, *args: object, **kwargs: object) -> None:
        """Initialize exception with message and details."""
        self.details = details
        super().__init__(message or type(self).__name__, *args, **kwargs)

class PacketError(BaseApplicationError):
    """Raise for packet codec errors."""

class MalformedPacket(PacketError):
    """Raise for truncated or inconsistent packet headers."""

class NotAnInfoPacket(PacketError):
    """Raise when an info-packet is expected and something else shows up."""

class IndexOutOfRange(PacketError):
    """Raise for availability indices which do not fit one octet."""

class ServerIdOverflow(PacketError):
    """Raise for server IDs which do not fit three bits."""

class MissingTimestampOption(PacketError):
    """Raise when a TCP packet needs the timestamp option and has none."""

class PipelineError(BaseApplicationError):
    """Raise for switch pipeline errors."""

class NoRoute(PipelineError):
    """Raise for LPM misses."""

class WidthOutOfRange(PipelineError):
    """Raise for ECMP widths outside the uplink range."""

class UnknownSender(PipelineError):
    """Raise when no Host_info entry matches the sender."""

class UnknownServerId(PipelineError):
    """Raise when a decoded server ID has no Host_info entry."""

class ClockRegression(BaseApplicationError):
    """Raise when simulated time goes backwards for a switch."""

class ScenarioError(BaseApplicationError):
    """Raise for scenario-related errors."""

class ScenarioParseError(ScenarioError):
    """Raise for scenario file syntax errors."""

class ScenarioValidationError(ScenarioError):
    """Raise for scenario files which break some invariant."""

class ReportError(BaseApplicationError):
    """Raise for unreadable or malformed result files."""

class UsageError(BaseApplicationError):
    """Raise for command line errors."""


def error(message: str, details: str='') -> None:
    """Preprocess and log error messages."""
    logger.set_indent(0)
    logger.error(Messages.ERROR_HEADER)
    logger.set_indent(Constants.ERROR_PAYLOAD_INDENT)
    logger.error(message)
    if details := details.strip():
        logger.error(Messages.ERROR_DETAILS_HEADING)
        logger.error('\n'.join(f'{Messages.ERROR_DETAILS_PREAMBLE}{line}' for line in details.split('\n')))
        logger.error(Messages.ERROR_DETAILS_TAIL)
    logger.set_indent(0)


def warning(message: str) -> None:
    """Preprocess and log warning messages."""
    logger.warning('%s', Messages.WARNING_HEADER + message[0].lower() + message[1:])
