"""Calendar and hourly clock."""

from __future__ import annotations

import dataclasses
from datetime import date, timedelta

import pytest

from wardsim.clock import (
    N_DAYS,
    N_HOURS,
    SIM_END,
    SIM_START,
    DayKind,
    EndOfSimulation,
    SimClock,
    all_dates,
    all_day_kinds,
    date_of_day,
    day_index_of,
    day_kind,
    national_holidays,
)
from wardsim.errors import ConfigurationError

# Independent copy of the national holidays inside the window.
EXPECTED_NATIONAL = {
    date(2022, 7, 18),
    date(2022, 8, 11),
    date(2022, 9, 19),
    date(2022, 9, 23),
    date(2022, 10, 10),
    date(2022, 11, 3),
    date(2022, 11, 23),
    date(2023, 1, 1),
    date(2023, 1, 2),
    date(2023, 1, 9),
}


def test_window_constants():
    assert SIM_START == date(2022, 7, 7)
    assert N_DAYS == 200
    assert N_HOURS == 4800
    assert SIM_END == date(2023, 1, 22)
    assert SIM_START.weekday() == 3  # Thursday
    assert SIM_END.weekday() == 6  # Sunday


def test_national_holidays_exact_set():
    assert set(national_holidays()) == EXPECTED_NATIONAL


def test_day_kind_matches_weekday_oracle():
    for d in range(N_DAYS):
        dt = SIM_START + timedelta(days=d)
        expect = (
            DayKind.HOLIDAY
            if dt.weekday() >= 5 or dt in EXPECTED_NATIONAL
            else DayKind.WEEKDAY
        )
        assert day_kind(dt) == expect


def test_holiday_total_count():
    kinds = all_day_kinds()
    assert len(kinds) == N_DAYS
    assert sum(1 for k in kinds if k == DayKind.HOLIDAY) == 67


def test_date_day_round_trip():
    for d in (0, 1, 99, 199):
        assert day_index_of(date_of_day(d)) == d
    assert date_of_day(0) == SIM_START
    assert date_of_day(199) == SIM_END


def test_out_of_range_rejected():
    with pytest.raises(ConfigurationError):
        date_of_day(200)
    with pytest.raises(ConfigurationError):
        date_of_day(-1)
    with pytest.raises(ConfigurationError):
        day_index_of(date(2022, 7, 6))
    with pytest.raises(ConfigurationError):
        day_index_of(date(2023, 1, 23))
    with pytest.raises(ConfigurationError):
        day_kind(date(2023, 1, 23))


def test_all_dates_unique_and_ordered():
    ds = all_dates()
    assert len(ds) == N_DAYS
    assert len(set(ds)) == N_DAYS
    assert list(ds) == sorted(ds)
    assert all((b - a).days == 1 for a, b in zip(ds, ds[1:]))


def test_clock_walks_every_hour_once():
    clock = SimClock()
    seen = 0
    while True:
        assert clock.step_index == seen
        assert clock.day_index == seen // 24
        assert clock.hour == seen % 24
        assert clock.kind == day_kind(clock.date)
        seen += 1
        if seen == N_HOURS:
            break
        clock = clock.advance()
    with pytest.raises(EndOfSimulation):
        clock.advance()
    assert seen == N_HOURS


def test_clock_rejects_bad_positions():
    with pytest.raises(ConfigurationError):
        SimClock(date(2022, 7, 6), 0)
    with pytest.raises(ConfigurationError):
        SimClock(SIM_START, 24)


def test_clock_is_immutable():
    clock = SimClock()
    with pytest.raises(dataclasses.FrozenInstanceError):
        clock.hour = 5  # type: ignore[misc]
