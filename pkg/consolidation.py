"""Epoch based traffic estimation driving the ECMP width register."""
from bisect import bisect_left
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import NamedTuple

from common import ClockRegression, logger, Messages, WidthOutOfRange


class WidthChange(NamedTuple):
    """One epoch rotation, as recorded in the width log."""  # noqa: D204
    time: float
    traffic: int
    before: int
    after: int


def recompute_width(traffic: int, thresholds: Sequence[int], max_width: int) -> int:
    """Compute the ECMP width for an epoch which carried traffic bytes.

    The width is one plus the number of thresholds strictly exceeded by
    traffic, capped at max_width.
    """
    return min(max_width, 1 + bisect_left(thresholds, traffic))


@dataclass(slots=True)
class ConsolidationState:  # pylint: disable=too-many-instance-attributes
    """Registers of the traffic consolidation block of one switch.

    With pinned set the width register is fixed at max_width, which is what
    plain ECMP does and what the baseline runs use.
    """

    epoch_length: float
    traffic_thresholds: tuple[int, ...]
    max_width: int
    aggr_switches: int = 1
    epoch_start: float = 0.0
    traffic: int = 0
    pinned: bool = False
    switch_name: str = ''
    width_log: list[WidthChange] = field(default_factory=list)

    def __post_init__(self) -> None:
        """Check the register invariants."""
        if self.max_width < 1:
            raise WidthOutOfRange('no uplinks to spread traffic on', self.max_width)
        if self.pinned:
            self.aggr_switches = self.max_width
        if not 1 <= self.aggr_switches <= self.max_width:
            raise WidthOutOfRange('initial width outside the uplink range', self.aggr_switches)

    def account(self, pkt_bytes: int, now: float) -> int:
        """Count pkt_bytes arriving at now and return the width to use for it.

        An arriving packet past the end of the epoch closes it first: the width
        is recomputed from the bytes of the closed epoch, the counter is reset
        and the new epoch starts at now. Only one rotation happens per packet,
        no matter how many epochs went by in silence.

        Raise ClockRegression if now is earlier than the epoch start.
        """
        if now < self.epoch_start:
            raise ClockRegression('time went backwards', (self.epoch_start, now))
        if now - self.epoch_start >= self.epoch_length:
            before = self.aggr_switches
            if not self.pinned:
                self.aggr_switches = recompute_width(self.traffic, self.traffic_thresholds, self.max_width)
            self.width_log.append(WidthChange(now, self.traffic, before, self.aggr_switches))
            if before != self.aggr_switches:
                logger.debug(Messages.WIDTH_CHANGE.format(now, self.switch_name, self.traffic, before, self.aggr_switches))
            self.traffic = 0
            self.epoch_start = now
        self.traffic += pkt_bytes
        return self.aggr_switches
