"""Simulation calendar: 200 days of hourly steps starting 2022-07-07.

Days are classified as weekday or holiday; holidays are Saturdays,
Sundays, and the Japanese national holidays bundled with the package
(data/jp_holidays.csv). The simulated range runs through 2023-01-22.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources

from wardsim.errors import ConfigurationError

SIM_START = dt.date(2022, 7, 7)
N_DAYS = 200
HOURS_PER_DAY = 24
N_HOURS = N_DAYS * HOURS_PER_DAY
SIM_END = SIM_START + dt.timedelta(days=N_DAYS - 1)


class DayKind(Enum):
    WEEKDAY = "weekday"
    HOLIDAY = "holiday"


class EndOfSimulation(Exception):
    """Raised when advancing a clock past the final hourly step."""


@lru_cache(maxsize=1)
def national_holidays() -> frozenset[dt.date]:
    """Dates of the bundled national-holiday table."""
    path = resources.files("wardsim.data").joinpath("jp_holidays.csv")
    with path.open("r", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return frozenset(dt.date.fromisoformat(row["date"]) for row in rows)


def _check_in_range(date: dt.date) -> None:
    if not SIM_START <= date <= SIM_END:
        raise ConfigurationError(
            f"date {date.isoformat()} outside simulated range "
            f"{SIM_START.isoformat()}..{SIM_END.isoformat()}"
        )


def day_kind(date: dt.date) -> DayKind:
    """Classify a date within the simulated range."""
    _check_in_range(date)
    if date.weekday() >= 5 or date in national_holidays():
        return DayKind.HOLIDAY
    return DayKind.WEEKDAY


def date_of_day(day_index: int) -> dt.date:
    if not 0 <= day_index < N_DAYS:
        raise ConfigurationError(f"day index {day_index} outside 0..{N_DAYS - 1}")
    return SIM_START + dt.timedelta(days=day_index)


def day_index_of(date: dt.date) -> int:
    _check_in_range(date)
    return (date - SIM_START).days


@lru_cache(maxsize=1)
def all_dates() -> tuple[dt.date, ...]:
    return tuple(date_of_day(d) for d in range(N_DAYS))


@lru_cache(maxsize=1)
def all_day_kinds() -> tuple[DayKind, ...]:
    return tuple(day_kind(d) for d in all_dates())


@dataclass(frozen=True)
class SimClock:
    """Position in simulated time: a date plus an hour 0-23."""

    date: dt.date = SIM_START
    hour: int = 0

    def __post_init__(self):
        _check_in_range(self.date)
        if not 0 <= self.hour < HOURS_PER_DAY:
            raise ConfigurationError(f"hour {self.hour} outside 0..23")

    @property
    def day_index(self) -> int:
        return (self.date - SIM_START).days

    @property
    def step_index(self) -> int:
        """Index of this hourly step, 0..4799."""
        return self.day_index * HOURS_PER_DAY + self.hour

    @property
    def kind(self) -> DayKind:
        return day_kind(self.date)

    def advance(self) -> "SimClock":
        """The next hourly step; raises EndOfSimulation past the last one."""
        if self.step_index + 1 >= N_HOURS:
            raise EndOfSimulation(f"no step after {self.date} {self.hour}:00")
        if self.hour + 1 < HOURS_PER_DAY:
            return SimClock(self.date, self.hour + 1)
        return SimClock(self.date + dt.timedelta(days=1), 0)
