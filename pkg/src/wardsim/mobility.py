"""Where every agent is, hour by hour.

Days split into five blocks. On weekdays adults are at their workplace
from morning through evening and children are at school from morning
through the afternoon; nights are spent at home. On holidays everyone
stays home. The lunch and evening blocks are when restaurant visits can
replace the default place; a visit decision is one keyed draw per adult
per slot, and admission to a concrete restaurant depends on opening
status and seat capacity.

Symptomatic cases withdraw: minor cases stay home for the duration,
severe cases stay home or in a hospital bed once admitted, and neither
visits restaurants; the dead have no place at all. A school's online
class status trims the weekday routine of its children: status 1 sends
them home after the morning, status 2 keeps them home all day.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from wardsim.clock import DayKind
from wardsim.epidemic import InfectionState
from wardsim.rng import KeyedRng, Purpose
from wardsim.world import DEAD_PLACE, World


class Slot(IntEnum):
    NIGHT = 0
    MORNING = 1
    LUNCH = 2
    AFTERNOON = 3
    EVENING = 4


_N, _M, _L, _A, _E = Slot.NIGHT, Slot.MORNING, Slot.LUNCH, Slot.AFTERNOON, Slot.EVENING

WEEKDAY_HOUR_SLOTS = np.array(
    [_N] * 9 + [_M] * 3 + [_L] + [_A] * 4 + [_E] * 4 + [_N] * 3, dtype=np.int8
)
HOLIDAY_HOUR_SLOTS = np.array(
    [_N] * 12 + [_L] + [_A] * 4 + [_E] * 4 + [_N] * 3, dtype=np.int8
)

VISIT_SLOTS = (Slot.LUNCH, Slot.EVENING)

# restaurant business-hours statuses
STATUS_FULL_HOURS = 0
STATUS_LUNCH_ONLY = 1
STATUS_CLOSED = 2


def slot_of(kind: DayKind, hour: int) -> Slot:
    table = WEEKDAY_HOUR_SLOTS if kind is DayKind.WEEKDAY else HOLIDAY_HOUR_SLOTS
    return Slot(int(table[hour]))


def hour_slots(kind: DayKind) -> np.ndarray:
    return WEEKDAY_HOUR_SLOTS if kind is DayKind.WEEKDAY else HOLIDAY_HOUR_SLOTS


def restaurant_open(status: int, slot: Slot) -> bool:
    if slot not in VISIT_SLOTS:
        return False
    if status == STATUS_FULL_HOURS:
        return True
    if status == STATUS_LUNCH_ONLY:
        return slot is Slot.LUNCH
    return False


def restaurants_open_mask(statuses: np.ndarray, slot: Slot) -> np.ndarray:
    if slot not in VISIT_SLOTS:
        return np.zeros(len(statuses), dtype=bool)
    if slot is Slot.LUNCH:
        return statuses != STATUS_CLOSED
    return statuses == STATUS_FULL_HOURS


@dataclass(frozen=True)
class MobilityPolicy:
    # restore the literal holiday routine: afternoons at work and school
    holiday_afternoon_at_work: bool = False


def default_places(world: World, policy: MobilityPolicy) -> dict:
    """(day kind, slot) -> global place id per agent, before visits.

    Covers ambulatory agents only; symptomatic, hospitalized and dead
    agents are overridden by the caller. Online class statuses are baked
    in here: children of a status-1 school are home from noon, children
    of a status-2 school are home for all school hours.
    """
    n = world.n_agents
    a = world.n_adults
    home = np.empty(n, dtype=np.int32)
    home[:a] = world.adult_home
    home[a:] = world.child_home
    duty = np.empty(n, dtype=np.int32)
    duty[:a] = world.workplace_offset + world.adult_workplace
    duty[a:] = world.school_offset + world.child_school

    status = world.school_status[world.child_school]
    morning = duty.copy()
    morning[a:][status == 2] = home[a:][status == 2]
    midday = duty.copy()
    midday[a:][status >= 1] = home[a:][status >= 1]
    # children leave school before the evening block
    evening = np.concatenate([duty[:a], home[a:]])

    out: dict[tuple[DayKind, Slot], np.ndarray] = {}
    for slot in Slot:
        out[(DayKind.WEEKDAY, slot)] = {
            Slot.NIGHT: home,
            Slot.MORNING: morning,
            Slot.LUNCH: midday,
            Slot.AFTERNOON: midday,
            Slot.EVENING: evening,
        }[slot]
        if slot is Slot.AFTERNOON and policy.holiday_afternoon_at_work:
            out[(DayKind.HOLIDAY, slot)] = duty
        else:
            out[(DayKind.HOLIDAY, slot)] = home
    return out


def decide_restaurant_visits(
    world: World,
    rng: KeyedRng,
    day: int,
    kind: DayKind,
    can_visit: np.ndarray,
    home_children: tuple[np.ndarray, np.ndarray],
) -> dict[Slot, np.ndarray]:
    """Assign restaurant places for the day's lunch and evening slots.

    can_visit marks agents free to move about (not severe, not dead).
    Returns per slot an int32 array over all agents holding a global
    restaurant place id, or -1 where the agent does not visit. Weekday
    candidate restaurants are the three nearest the adult's workplace;
    holiday candidates are the three nearest home, and cohabiting
    children come along with the first seated adult of their home.
    Demand beyond seat capacity falls back to the default place.
    """
    n_agents = world.n_agents
    n_adults = world.n_adults
    c_order, c_indptr = home_children
    out: dict[Slot, np.ndarray] = {}
    adult_ids = np.arange(n_adults)
    holiday = kind is DayKind.HOLIDAY
    cand_matrix = (
        world.home_nearest_restaurants if holiday else world.work_nearest_restaurants
    )
    cand_src = world.adult_home if holiday else world.adult_workplace

    for slot in VISIT_SLOTS:
        place = np.full(n_agents, -1, dtype=np.int32)
        open_mask = restaurants_open_mask(world.rest_status, slot)
        if not open_mask.any():
            out[slot] = place
            continue
        u = rng.draw_array(Purpose.VISIT, day, int(slot), adult_ids)
        want = (u < world.adult_propensity) & can_visit[:n_adults]
        want_ids = adult_ids[want]
        if len(want_ids) == 0:
            out[slot] = place
            continue
        keys = rng.draw_array(Purpose.VISIT_ORDER, day, int(slot), want_ids)
        order = want_ids[np.lexsort((want_ids, keys))]
        seats_left = world.rest_seats.astype(np.int64)
        claimed = np.zeros(world.n_children, dtype=bool)
        offset = world.restaurant_offset
        for a in order:
            if holiday:
                h = world.adult_home[a]
                kids = c_order[c_indptr[h] : c_indptr[h + 1]]
                kids = [
                    c for c in kids if can_visit[n_adults + c] and not claimed[c]
                ]
            else:
                kids = []
            size = 1 + len(kids)
            for r in cand_matrix[cand_src[a]]:
                if open_mask[r] and seats_left[r] >= size:
                    seats_left[r] -= size
                    place[a] = offset + r
                    for c in kids:
                        place[n_adults + c] = offset + r
                        claimed[c] = True
                    break
        out[slot] = place
    return out


def admit_hospitals(
    world: World,
    agent_ids: np.ndarray,
    agent_home: np.ndarray,
    beds_free: np.ndarray,
    hospital_of: np.ndarray,
) -> None:
    """Try to place newly severe agents into beds, ascending agent id.

    Each agent tries the three hospitals nearest its home once, in
    distance order; if all are full the agent stays home for the whole
    severe period. beds_free and hospital_of are updated in place.
    """
    for a in np.sort(agent_ids):
        for h in world.home_nearest_hospitals[agent_home[a]]:
            if beds_free[h] > 0:
                beds_free[h] -= 1
                hospital_of[a] = h
                break


def scheduled_place(
    world: World,
    policy: MobilityPolicy,
    agent: int,
    state: int,
    kind: DayKind,
    hour: int,
    visits: dict[Slot, np.ndarray],
    hospital_of: np.ndarray,
) -> int:
    """Global place of one agent at one hour. Scalar reference path."""
    n_adults = world.n_adults
    if state == int(InfectionState.DEAD):
        return DEAD_PLACE
    if hospital_of[agent] >= 0:
        return world.hospital_offset + int(hospital_of[agent])
    if agent < n_adults:
        home = int(world.adult_home[agent])
        duty = world.workplace_offset + int(world.adult_workplace[agent])
        school_status = 0
    else:
        home = int(world.child_home[agent - n_adults])
        duty = world.school_offset + int(world.child_school[agent - n_adults])
        school_status = int(world.school_status[world.child_school[agent - n_adults]])
    if state in (
        int(InfectionState.MINOR_SYMPTOMS),
        int(InfectionState.SEVERE_SYMPTOMS),
    ):
        return home
    slot = slot_of(kind, hour)
    if slot in VISIT_SLOTS and visits[slot][agent] >= 0:
        return int(visits[slot][agent])
    if kind is DayKind.WEEKDAY:
        if slot is Slot.NIGHT:
            return home
        if agent >= n_adults:
            if slot is Slot.EVENING:
                return home
            if slot is Slot.MORNING:
                return home if school_status == 2 else duty
            return home if school_status >= 1 else duty
        return duty
    if slot is Slot.AFTERNOON and policy.holiday_afternoon_at_work:
        return duty
    return home
