"""The simulation loop: 200 days of hourly place assignment and exposure.

Health states only change at midnight, so the set of infectious agents
is fixed for a whole day and places are fixed for a whole slot. The
engine exploits both: per slot it assigns places and tallies infectious
occupants once, then per hour draws one keyed Bernoulli per exposed
susceptible. Each draw's key is (purpose, hour index, agent id), so
results do not depend on evaluation order, worker count, or how many
other agents are drawn for.

Newly infected agents become PRE_EXPOSED immediately (end of the hour):
they stop being infection targets but do not transmit until converted
to EXPOSED at the next midnight.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import pandas as pd

from wardsim import clock
from wardsim.clock import DayKind
from wardsim.epidemic import (
    INFECTIOUS_MASK,
    EpidemicParams,
    InfectionState,
    infection_probability_array,
    sample_courses,
)
from wardsim.errors import ConfigurationError
from wardsim.mobility import (
    VISIT_SLOTS,
    MobilityPolicy,
    Slot,
    admit_hospitals,
    decide_restaurant_visits,
    default_places,
    hour_slots,
)
from wardsim.rng import KeyedRng, Purpose
from wardsim.world import DEAD_PLACE, PLACE_KIND_NAMES, World

_SUS = int(InfectionState.SUSCEPTIBLE)
_PRE = int(InfectionState.PRE_EXPOSED)
_EXP = int(InfectionState.EXPOSED)
_MIN = int(InfectionState.MINOR_SYMPTOMS)
_SEV = int(InfectionState.SEVERE_SYMPTOMS)
_REC = int(InfectionState.RECOVERED)
_DEAD = int(InfectionState.DEAD)


@dataclass
class SimulationTrace:
    """Everything a run produced, still in array form."""

    world: World
    params: EpidemicParams
    seed: int
    places: np.ndarray            # (n_hours, n_agents) int32, -1 for dead
    states: np.ndarray            # (n_days, n_agents) int8, start-of-day
    infection_day: np.ndarray     # (n_agents,) int16, -1 if never infected
    infection_place: np.ndarray   # (n_agents,) int32, -1 for the seed case
    new_infections: np.ndarray    # (n_days,) int32
    deaths: np.ndarray            # (n_days,) int32
    hospital_occupancy: np.ndarray  # (n_days,) int32
    infections_by_place_kind: dict[str, int] = field(default_factory=dict)

    @property
    def n_days(self) -> int:
        return self.states.shape[0]

    @property
    def n_hours(self) -> int:
        return self.places.shape[0]

    def ever_infected(self) -> np.ndarray:
        return self.infection_day >= 0

    def attack_rate(self) -> float:
        return float(self.ever_infected().mean())

    def summary_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "date": [d.isoformat() for d in clock.all_dates()],
                "new_infections": self.new_infections,
                "deaths": self.deaths,
                "hospital_occupancy": self.hospital_occupancy,
            }
        )


class Simulation:
    def __init__(
        self,
        world: World,
        params: EpidemicParams,
        seed: int,
        policy: MobilityPolicy | None = None,
        workers: int = 1,
    ):
        params.validate()
        if workers < 1:
            raise ConfigurationError(f"run.workers: {workers} must be >= 1")
        self.world = world
        self.params = params
        self.seed = seed
        self.policy = policy or MobilityPolicy()
        # results are worker-count independent; extra workers are a
        # best-effort hint and the current engine runs single-threaded
        self.workers = workers
        self.rng = KeyedRng(seed)

    def run(self, progress: Callable[[int], None] | None = None) -> SimulationTrace:
        world, params, rng = self.world, self.params, self.rng
        n_agents = world.n_agents
        n_adults = world.n_adults
        n_days, n_hours = clock.N_DAYS, clock.N_HOURS

        agent_home = np.empty(n_agents, dtype=np.int32)
        agent_home[:n_adults] = world.adult_home
        agent_home[n_adults:] = world.child_home
        ages = np.empty(n_agents, dtype=np.int16)
        ages[:n_adults] = world.adult_age
        ages[n_adults:] = world.child_age
        vaccinated = np.zeros(n_agents, dtype=bool)
        vaccinated[:n_adults] = world.adult_vaccinated

        place_kinds = world.place_kinds()
        alpha_by_place = params.alphas_by_place_kind()[place_kinds]
        defaults = default_places(world, self.policy)
        home_children = world.home_members()[2:4]
        day_kinds = clock.all_day_kinds()

        state = np.full(n_agents, _SUS, dtype=np.int8)
        entry_day = np.full(n_agents, -1, dtype=np.int32)
        course_exposed = np.zeros(n_agents, dtype=np.int16)
        course_branch = np.zeros(n_agents, dtype=np.int8)
        course_days = np.zeros(n_agents, dtype=np.int16)
        course_dies = np.zeros(n_agents, dtype=bool)
        hospital_of = np.full(n_agents, -1, dtype=np.int32)
        beds_free = world.hosp_beds.astype(np.int64).copy()

        places = np.empty((n_hours, n_agents), dtype=np.int32)
        states = np.empty((n_days, n_agents), dtype=np.int8)
        infection_day = np.full(n_agents, -1, dtype=np.int16)
        infection_place = np.full(n_agents, -1, dtype=np.int32)
        new_infections = np.zeros(n_days, dtype=np.int32)
        deaths = np.zeros(n_days, dtype=np.int32)
        occupancy = np.zeros(n_days, dtype=np.int32)
        kind_counts = np.zeros(len(PLACE_KIND_NAMES), dtype=np.int64)

        # patient zero: one adult, exposed from the start of day 0
        seed_agent = rng.draw_int(0, n_adults - 1, Purpose.INITIAL_CASE)
        self._set_courses(
            np.array([seed_agent]), 0,
            (course_exposed, course_branch, course_days, course_dies),
        )
        state[seed_agent] = _EXP
        entry_day[seed_agent] = 0
        infection_day[seed_agent] = 0
        new_infections[0] = 1

        for d in range(n_days):
            if d > 0:
                prev = state.copy()
                days_in = d - entry_day
                # finished branch states resolve to an outcome
                in_branch = (prev >= int(InfectionState.ASYMPTOMATIC)) & (prev <= _SEV)
                done = in_branch & (days_in >= course_days)
                dying = done & (prev == _SEV) & course_dies
                state[done] = _REC
                state[dying] = _DEAD
                entry_day[done] = d
                deaths[d] = int(dying.sum())
                # finished incubation branches out
                exp_done = (prev == _EXP) & (days_in >= course_exposed)
                state[exp_done] = course_branch[exp_done]
                entry_day[exp_done] = d
                # yesterday's infections become infectious
                pre = prev == _PRE
                state[pre] = _EXP
                entry_day[pre] = d
                # beds free up on recovery or death
                leave = (hospital_of >= 0) & (state != _SEV)
                if leave.any():
                    np.add.at(beds_free, hospital_of[leave], 1)
                    hospital_of[leave] = -1
                # fresh severe cases try for a bed, once
                newly_severe = exp_done & (state == _SEV)
                if newly_severe.any():
                    admit_hospitals(
                        world, np.flatnonzero(newly_severe), agent_home,
                        beds_free, hospital_of,
                    )
            states[d] = state
            occupancy[d] = int((hospital_of >= 0).sum())

            kind = day_kinds[d]
            # the symptomatic withdraw for the day, the dead for good
            can_visit = (state != _MIN) & (state != _SEV) & (state != _DEAD)
            visits = decide_restaurant_visits(
                world, rng, d, kind, can_visit, home_children
            )

            # place per agent for each slot of this day
            slot_places: dict[Slot, np.ndarray] = {}
            home_mask = (state == _MIN) | (state == _SEV)
            hosp_mask = hospital_of >= 0
            dead_mask = state == _DEAD
            for slot in Slot:
                pl = defaults[(kind, slot)].copy()
                if slot in VISIT_SLOTS:
                    v = visits[slot]
                    chose = v >= 0
                    pl[chose] = v[chose]
                pl[home_mask] = agent_home[home_mask]
                pl[hosp_mask] = world.hospital_offset + hospital_of[hosp_mask]
                pl[dead_mask] = DEAD_PLACE
                slot_places[slot] = pl

            slots_today = hour_slots(kind)
            for h in range(24):
                places[d * 24 + h] = slot_places[Slot(int(slots_today[h]))]

            # exposure: infectious sets are frozen for the day, so per
            # slot we tally occupants once and per hour draw survivors
            infectious = INFECTIOUS_MASK[state]
            sus0 = state == _SUS
            slot_cand: dict[Slot, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
            for slot in set(int(s) for s in slots_today):
                slot = Slot(slot)
                pl = slot_places[slot]
                inf_pl = pl[infectious]
                beta = np.bincount(
                    inf_pl[inf_pl >= 0], minlength=world.n_places
                )
                cand = np.flatnonzero(sus0)
                cpl = pl[cand]
                cbeta = beta[cpl]
                calpha = alpha_by_place[cpl]
                hot = (cbeta > 0) & (calpha > 0.0)
                cand, cpl = cand[hot], cpl[hot]
                if len(cand) == 0:
                    slot_cand[slot] = (cand, cpl, np.zeros(0))
                    continue
                p = infection_probability_array(
                    calpha[hot], cbeta[hot], ages[cand].astype(np.float64),
                    params.gamma, vaccinated[cand],
                )
                slot_cand[slot] = (cand, cpl, p)

            for h in range(24):
                slot = Slot(int(slots_today[h]))
                cand, cpl, p = slot_cand[slot]
                if len(cand) == 0:
                    continue
                live = state[cand] == _SUS
                if not live.any():
                    continue
                ids, ppl, pp = cand[live], cpl[live], p[live]
                u = rng.draw_array(Purpose.INFECTION, d * 24 + h, ids)
                hit = u < pp
                if not hit.any():
                    continue
                new_ids, new_pl = ids[hit], ppl[hit]
                state[new_ids] = _PRE
                infection_day[new_ids] = d
                infection_place[new_ids] = new_pl
                self._set_courses(
                    new_ids, d,
                    (course_exposed, course_branch, course_days, course_dies),
                )
                new_infections[d] += int(hit.sum())
                kind_counts += np.bincount(
                    place_kinds[new_pl], minlength=len(PLACE_KIND_NAMES)
                )

            if progress is not None:
                progress(d + 1)

        by_kind = {
            name: int(kind_counts[i]) for i, name in enumerate(PLACE_KIND_NAMES)
        }
        return SimulationTrace(
            world=world,
            params=params,
            seed=self.seed,
            places=places,
            states=states,
            infection_day=infection_day,
            infection_place=infection_place,
            new_infections=new_infections,
            deaths=deaths,
            hospital_occupancy=occupancy,
            infections_by_place_kind=by_kind,
        )

    def _set_courses(self, agent_ids: np.ndarray, day: int, arrays) -> None:
        exposed, branch, bdays, dies = sample_courses(
            self.rng, agent_ids, day, self.params
        )
        c_exposed, c_branch, c_days, c_dies = arrays
        c_exposed[agent_ids] = exposed
        c_branch[agent_ids] = branch
        c_days[agent_ids] = bdays
        c_dies[agent_ids] = dies


def run(
    world: World,
    params: EpidemicParams,
    seed: int,
    policy: MobilityPolicy | None = None,
    workers: int = 1,
    progress: Callable[[int], None] | None = None,
) -> SimulationTrace:
    """Build and run a Simulation in one call."""
    return Simulation(world, params, seed, policy=policy, workers=workers).run(
        progress
    )
