"""Infection states, transmission probability, and disease courses.

Transmission is evaluated per agent per hour against the place the agent
occupies. With a place-kind coefficient alpha, beta infectious occupants
sharing the place, agent age in years, gamma the age-shape parameter and
delta 1 for vaccinated agents (0 otherwise), the infection probability is

    p = clamp( (1 - (1 - alpha)^beta) * (age/10)^(3*gamma) * 0.1^delta )

clamped into [0, 1]. beta = 0 gives exactly 0; gamma = 0 removes the age
term exactly; the vaccinated probability is exactly one tenth of the
unvaccinated one whenever the clamp is inactive.

Newly infected agents enter PRE_EXPOSED for the rest of the day (not
infectious, no longer susceptible) and convert to EXPOSED at the next
midnight. State changes only happen at midnight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from wardsim.errors import ConfigurationError
from wardsim.rng import KeyedRng, Purpose
from wardsim.world import (
    PLACE_KIND_HOME,
    PLACE_KIND_HOSPITAL,
    PLACE_KIND_RESTAURANT,
    PLACE_KIND_SCHOOL,
    PLACE_KIND_WORKPLACE,
)


class InfectionState(IntEnum):
    SUSCEPTIBLE = 0
    PRE_EXPOSED = 1
    EXPOSED = 2
    ASYMPTOMATIC = 3
    MINOR_SYMPTOMS = 4
    SEVERE_SYMPTOMS = 5
    RECOVERED = 6
    DEAD = 7


STATE_NAMES = (
    "susceptible",
    "pre_exposed",
    "exposed",
    "asymptomatic",
    "minor",
    "severe",
    "recovered",
    "dead",
)

STATE_CODES = {name: i for i, name in enumerate(STATE_NAMES)}

INFECTIOUS_STATES = frozenset(
    {
        InfectionState.EXPOSED,
        InfectionState.ASYMPTOMATIC,
        InfectionState.MINOR_SYMPTOMS,
        InfectionState.SEVERE_SYMPTOMS,
    }
)

# bool lookup over state codes, for vectorized checks
INFECTIOUS_MASK = np.zeros(len(STATE_NAMES), dtype=bool)
for _s in INFECTIOUS_STATES:
    INFECTIOUS_MASK[int(_s)] = True

_S = InfectionState
# legal day-over-day moves in the daily state record; PRE_EXPOSED converts
# before the day is recorded so it never appears there
ALLOWED_DAILY_TRANSITIONS: dict[InfectionState, frozenset[InfectionState]] = {
    _S.SUSCEPTIBLE: frozenset({_S.SUSCEPTIBLE, _S.EXPOSED}),
    _S.PRE_EXPOSED: frozenset({_S.EXPOSED}),
    _S.EXPOSED: frozenset(
        {_S.EXPOSED, _S.ASYMPTOMATIC, _S.MINOR_SYMPTOMS, _S.SEVERE_SYMPTOMS}
    ),
    _S.ASYMPTOMATIC: frozenset({_S.ASYMPTOMATIC, _S.RECOVERED}),
    _S.MINOR_SYMPTOMS: frozenset({_S.MINOR_SYMPTOMS, _S.RECOVERED}),
    _S.SEVERE_SYMPTOMS: frozenset({_S.SEVERE_SYMPTOMS, _S.RECOVERED, _S.DEAD}),
    _S.RECOVERED: frozenset({_S.RECOVERED}),
    _S.DEAD: frozenset({_S.DEAD}),
}


@dataclass(frozen=True)
class EpidemicParams:
    alpha_home: float = 0.03
    alpha_workplace: float = 0.00017
    alpha_restaurant: float = 0.012
    alpha_school: float = 0.0025
    gamma: float = 0.0
    p_asymptomatic: float = 0.3
    p_minor: float = 0.6
    p_severe: float = 0.1
    p_death: float = 0.2
    exposed_days: tuple[int, int] = (2, 5)
    symptomatic_days: tuple[int, int] = (3, 7)

    def validate(self) -> None:
        for name in ("alpha_home", "alpha_workplace", "alpha_restaurant",
                     "alpha_school"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigurationError(f"epidemic.{name}: {v} outside [0, 1]")
        if self.gamma < 0.0:
            raise ConfigurationError(f"epidemic.gamma: {self.gamma} must be >= 0")
        for name in ("p_asymptomatic", "p_minor", "p_severe", "p_death"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigurationError(f"epidemic.{name}: {v} outside [0, 1]")
        total = self.p_asymptomatic + self.p_minor + self.p_severe
        if not math.isclose(total, 1.0, rel_tol=0.0, abs_tol=1e-9):
            raise ConfigurationError(
                f"epidemic.p_asymptomatic/p_minor/p_severe: sum {total}, need 1"
            )
        for name in ("exposed_days", "symptomatic_days"):
            lo, hi = getattr(self, name)
            if lo < 1 or lo > hi:
                raise ConfigurationError(f"epidemic.{name}: bad range {lo}..{hi}")

    def alphas_by_place_kind(self) -> np.ndarray:
        """Transmission coefficient per place kind; hospitals are inert."""
        out = np.zeros(5, dtype=np.float64)
        out[PLACE_KIND_HOME] = self.alpha_home
        out[PLACE_KIND_WORKPLACE] = self.alpha_workplace
        out[PLACE_KIND_RESTAURANT] = self.alpha_restaurant
        out[PLACE_KIND_HOSPITAL] = 0.0
        out[PLACE_KIND_SCHOOL] = self.alpha_school
        return out


def raw_infection_probability(
    alpha: float, beta: int, age: int, gamma: float, vaccinated: bool
) -> float:
    """The probability product before clamping. Scalar reference path."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    bracket = 1.0 - (1.0 - alpha) ** beta
    agefac = (age / 10.0) ** (3.0 * gamma)
    p = bracket * agefac
    if vaccinated:
        p *= 0.1
    return p


def infection_probability(
    alpha: float, beta: int, age: int, gamma: float, vaccinated: bool
) -> float:
    p = raw_infection_probability(alpha, beta, age, gamma, vaccinated)
    return min(max(p, 0.0), 1.0)


def infection_probability_array(
    alpha: np.ndarray,
    beta: np.ndarray,
    age: np.ndarray,
    gamma: float,
    vaccinated: np.ndarray,
) -> np.ndarray:
    """Vectorized infection probability.

    Agrees with the scalar path to within one ulp (the vector pow kernel
    may round differently); exactly equal in the cases that carry meaning:
    gamma = 0 (no age effect), beta = 0 (probability zero), and the
    vaccination factor, which is always exactly 0.1 times the unvaccinated
    value before clamping.
    """
    bracket = 1.0 - np.power(1.0 - alpha, beta)
    agefac = np.power(age / 10.0, 3.0 * gamma)
    p = bracket * agefac
    p = np.where(vaccinated, p * 0.1, p)
    return np.clip(p, 0.0, 1.0)


@dataclass(frozen=True)
class DiseaseCourse:
    """Resolved future of one infection, sampled when it happens."""

    exposed_days: int
    branch: InfectionState
    branch_days: int
    dies: bool


def sample_course(
    rng: KeyedRng, agent_id: int, day: int, params: EpidemicParams
) -> DiseaseCourse:
    """Scalar reference; the engine uses sample_courses."""
    lo, hi = params.exposed_days
    exposed = rng.draw_int(lo, hi, Purpose.COURSE_EXPOSED_DAYS, agent_id, day)
    u = rng.draw(Purpose.COURSE_BRANCH, agent_id, day)
    if u < params.p_asymptomatic:
        branch = InfectionState.ASYMPTOMATIC
    elif u < params.p_asymptomatic + params.p_minor:
        branch = InfectionState.MINOR_SYMPTOMS
    else:
        branch = InfectionState.SEVERE_SYMPTOMS
    slo, shi = params.symptomatic_days
    branch_days = rng.draw_int(slo, shi, Purpose.COURSE_SYMPTOMATIC_DAYS, agent_id, day)
    dies = False
    if branch is InfectionState.SEVERE_SYMPTOMS:
        dies = rng.draw(Purpose.COURSE_OUTCOME, agent_id, day) < params.p_death
    return DiseaseCourse(exposed, branch, branch_days, dies)


def sample_courses(
    rng: KeyedRng, agent_ids: np.ndarray, day: int, params: EpidemicParams
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized course sampling for every id in agent_ids.

    Returns (exposed_days, branch_state, branch_days, dies) aligned with
    agent_ids. Draw for draw identical to sample_course.
    """
    n = len(agent_ids)
    if n == 0:
        z = np.zeros(0, dtype=np.int16)
        return z, z.astype(np.int8), z.copy(), np.zeros(0, dtype=bool)
    lo, hi = params.exposed_days
    exposed = rng.draw_int_array(
        lo, hi, Purpose.COURSE_EXPOSED_DAYS, agent_ids, day
    ).astype(np.int16)
    u = rng.draw_array(Purpose.COURSE_BRANCH, agent_ids, day)
    branch = np.full(n, int(InfectionState.SEVERE_SYMPTOMS), dtype=np.int8)
    branch[u < params.p_asymptomatic + params.p_minor] = int(
        InfectionState.MINOR_SYMPTOMS
    )
    branch[u < params.p_asymptomatic] = int(InfectionState.ASYMPTOMATIC)
    slo, shi = params.symptomatic_days
    branch_days = rng.draw_int_array(
        slo, shi, Purpose.COURSE_SYMPTOMATIC_DAYS, agent_ids, day
    ).astype(np.int16)
    dies = np.zeros(n, dtype=bool)
    sev = branch == int(InfectionState.SEVERE_SYMPTOMS)
    if sev.any():
        out_u = rng.draw_array(Purpose.COURSE_OUTCOME, agent_ids[sev], day)
        dies[sev] = out_u < params.p_death
    return exposed, branch, branch_days, dies


def advance_state_daily(
    state: InfectionState, days_in_state: int, course: DiseaseCourse
) -> InfectionState:
    """One midnight step for one agent. Scalar reference for the engine.

    days_in_state counts complete days already spent in the current state
    when the midnight in question arrives.
    """
    if state is InfectionState.PRE_EXPOSED:
        return InfectionState.EXPOSED
    if state is InfectionState.EXPOSED:
        if days_in_state >= course.exposed_days:
            return course.branch
        return state
    if state in (
        InfectionState.ASYMPTOMATIC,
        InfectionState.MINOR_SYMPTOMS,
        InfectionState.SEVERE_SYMPTOMS,
    ):
        if days_in_state >= course.branch_days:
            if state is InfectionState.SEVERE_SYMPTOMS and course.dies:
                return InfectionState.DEAD
            return InfectionState.RECOVERED
        return state
    return state
