"""Engine behaviour: hand traces, determinism, epidemic bookkeeping."""

from __future__ import annotations

import numpy as np
import pytest

from conftest import run_tiny, tiny_params, tiny_world_config
from wardsim import engine
from wardsim.clock import N_DAYS, N_HOURS, all_day_kinds
from wardsim.epidemic import (
    ALLOWED_DAILY_TRANSITIONS,
    INFECTIOUS_MASK,
    EpidemicParams,
    InfectionState,
)
from wardsim.errors import ConfigurationError
from wardsim.mobility import MobilityPolicy
from wardsim.scenario import ScenarioConfig, ScenarioKind
from wardsim.verify import check_trace
from wardsim.world import build_world

S = InfectionState
CUSTOM = ScenarioConfig(kind=ScenarioKind.CUSTOM)


def pair_world():
    """Two adults sharing the single home; no children."""
    cfg = tiny_world_config(
        adults=2, children=0, homes=1, workplaces=1, restaurants=1,
        hospitals=1, schools=1,
    )
    return build_world(cfg, CUSTOM, seed=1)


def test_certain_home_transmission_hand_trace():
    world = pair_world()
    params = tiny_params(alpha_home=1.0, alpha_workplace=0.0,
                         alpha_restaurant=0.0, alpha_school=0.0)
    trace = engine.run(world, params, seed=1)

    seed_agent = int(np.flatnonzero(trace.infection_day == 0)[0])
    other = 1 - seed_agent
    # both asleep at home for hour 0 with alpha 1: infection is certain
    assert trace.infection_day[other] == 0
    assert trace.infection_place[other] == world.adult_home[other]  # home id 0
    assert trace.infection_place[seed_agent] == -1
    # PRE_EXPOSED never shows in the daily matrix; EXPOSED from day 1
    assert trace.states[0, other] == int(S.SUSCEPTIBLE)
    assert trace.states[1, other] == int(S.EXPOSED)
    assert trace.states[0, seed_agent] == int(S.EXPOSED)
    assert trace.attack_rate() == 1.0


def test_no_transmission_when_alphas_zero():
    params = tiny_params(alpha_home=0.0, alpha_workplace=0.0,
                         alpha_restaurant=0.0, alpha_school=0.0)
    _, trace = run_tiny(params=params, seed=3)
    assert int(trace.ever_infected().sum()) == 1
    assert trace.new_infections[0] == 1
    assert trace.new_infections[1:].sum() == 0
    seed_agent = int(np.flatnonzero(trace.infection_day == 0)[0])
    untouched = np.delete(trace.states, seed_agent, axis=1)
    assert (untouched == int(S.SUSCEPTIBLE)).all()


def test_seed_case_is_one_adult():
    _, trace = run_tiny(seed=5)
    day0 = np.flatnonzero(trace.infection_day == 0)
    assert len(day0) >= 1
    seeded = day0[trace.infection_place[day0] == -1]
    assert len(seeded) == 1
    assert seeded[0] < trace.world.n_adults
    assert trace.states[0, seeded[0]] == int(S.EXPOSED)


def test_run_deterministic_and_seed_sensitive():
    _, a = run_tiny(seed=4)
    _, b = run_tiny(seed=4)
    assert np.array_equal(a.places, b.places)
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.infection_day, b.infection_day)
    _, c = run_tiny(seed=6)
    assert not np.array_equal(a.states, c.states)


def test_workers_hint_does_not_change_results():
    world = build_world(tiny_world_config(), CUSTOM, seed=2)
    params = tiny_params()
    one = engine.run(world, params, seed=2, workers=1)
    four = engine.run(world, params, seed=2, workers=4)
    assert np.array_equal(one.places, four.places)
    assert np.array_equal(one.states, four.states)
    with pytest.raises(ConfigurationError, match="workers"):
        engine.run(world, params, seed=2, workers=0)


def test_trace_shapes_and_ranges(micro_trace):
    t = micro_trace
    n = t.world.n_agents
    assert t.places.shape == (N_HOURS, n)
    assert t.states.shape == (N_DAYS, n)
    assert t.n_days == N_DAYS and t.n_hours == N_HOURS
    valid = (t.places >= 0) & (t.places < t.world.n_places)
    dead = t.places == -1
    assert (valid | dead).all()
    assert set(np.unique(t.states)) <= {int(s) for s in S}
    assert int(S.PRE_EXPOSED) not in set(np.unique(t.states))


def test_daily_transitions_legal(micro_trace):
    states = micro_trace.states
    allowed = {
        int(k): {int(v) for v in vs} for k, vs in ALLOWED_DAILY_TRANSITIONS.items()
    }
    for d in range(1, states.shape[0]):
        pairs = set(zip(states[d - 1].tolist(), states[d].tolist()))
        for before, after in pairs:
            assert after in allowed[before], (d, before, after)


def test_infection_day_consistent_with_states(micro_trace):
    t = micro_trace
    for a in np.flatnonzero(t.ever_infected()):
        d = int(t.infection_day[a])
        # exposed shows the midnight after infection day (the seed on day 0)
        first_nonsus = int(np.argmax(t.states[:, a] != int(S.SUSCEPTIBLE)))
        if t.infection_place[a] == -1:
            assert first_nonsus == 0 and d == 0
        else:
            assert first_nonsus == d + 1
    never = ~t.ever_infected()
    assert (t.states[:, never] == int(S.SUSCEPTIBLE)).all()


def test_new_infections_and_deaths_match_states(micro_trace):
    t = micro_trace
    counted = np.bincount(
        t.infection_day[t.ever_infected()].astype(np.int64), minlength=N_DAYS
    )
    assert np.array_equal(counted, t.new_infections)
    dead_per_day = (t.states == int(S.DEAD)).sum(axis=1)
    diffs = np.diff(np.concatenate([[0], dead_per_day]))
    assert np.array_equal(diffs, t.deaths)
    assert t.ever_infected().sum() == t.new_infections.sum()


def test_infection_colocation_with_infectious_agent(micro_trace):
    t = micro_trace
    infected = np.flatnonzero(t.ever_infected() & (t.infection_place >= 0))
    assert len(infected) > 3
    for a in infected:
        d = int(t.infection_day[a])
        pl = int(t.infection_place[a])
        infectious_that_day = INFECTIOUS_MASK[t.states[d]]
        hours = t.places[d * 24 : (d + 1) * 24]
        shared = (
            (hours[:, a] == pl)
            & (hours[:, infectious_that_day] == pl).any(axis=1)
        ).any()
        assert shared, (a, d, pl)


def test_hospital_and_severe_placement(lethal_trace):
    t = lethal_trace
    world = t.world
    sev = int(S.SEVERE_SYMPTOMS)
    hosp_lo, hosp_hi = world.hospital_offset, world.hospital_offset + world.n_hospitals
    agent_home = np.concatenate([world.adult_home, world.child_home])
    assert (t.states == sev).any()
    assert t.deaths.sum() > 0

    for a in range(world.n_agents):
        sev_days = np.flatnonzero(t.states[:, a] == sev)
        if len(sev_days) == 0:
            continue
        day_places = t.places[:, a].reshape(N_DAYS, 24)
        ep = day_places[sev_days]
        in_hosp = (ep >= hosp_lo) & (ep < hosp_hi)
        at_home = ep == agent_home[a]
        # a severe day is spent entirely in one bed or entirely at home
        assert (in_hosp.all(axis=1) | at_home.all(axis=1)).all()
        # admission is one-shot on the first severe day: once home, always home
        daily_hosp = in_hosp.all(axis=1)
        if not daily_hosp[0]:
            assert not daily_hosp.any()
        else:
            # bed is held until the episode ends
            assert daily_hosp.all()


def test_bed_capacity_never_exceeded(lethal_trace):
    t = lethal_trace
    world = t.world
    hosp_lo = world.hospital_offset
    total_beds = int(world.hosp_beds.sum())
    assert t.hospital_occupancy.max() <= total_beds
    assert t.hospital_occupancy.max() > 0
    # per-hospital occupancy from places, using noon each day
    noon = t.places[12::24]
    for d in range(N_DAYS):
        at_h = noon[d][(noon[d] >= hosp_lo) & (noon[d] < hosp_lo + world.n_hospitals)]
        by_hospital = np.bincount(at_h - hosp_lo, minlength=world.n_hospitals)
        # visitors do not exist; everyone at a hospital occupies a bed
        assert (by_hospital <= world.hosp_beds).all()


def test_dead_agents_have_no_place(lethal_trace):
    t = lethal_trace
    dead_any = np.flatnonzero((t.states == int(S.DEAD)).any(axis=0))
    assert len(dead_any) > 0
    for a in dead_any:
        first_dead = int(np.argmax(t.states[:, a] == int(S.DEAD)))
        assert (t.places[first_dead * 24 :, a] == -1).all()
        assert (t.places[: first_dead * 24, a] != -1).all()


def test_no_infections_at_hospitals(lethal_trace):
    assert lethal_trace.infections_by_place_kind.get("hospital", 0) == 0
    world = lethal_trace.world
    lo = world.hospital_offset
    hi = lo + world.n_hospitals
    pl = lethal_trace.infection_place
    assert not ((pl >= lo) & (pl < hi)).any()


def test_infections_by_place_kind_totals(micro_trace):
    t = micro_trace
    by_kind = t.infections_by_place_kind
    assert set(by_kind) == {"home", "workplace", "restaurant", "hospital", "school"}
    # every infection except the seeded case happened at some place
    assert sum(by_kind.values()) == int(t.ever_infected().sum()) - 1
    kinds = t.world.place_kinds()
    placed = t.infection_place[t.infection_place >= 0]
    counted = np.bincount(kinds[placed], minlength=5)
    assert by_kind == {
        name: int(counted[i])
        for i, name in enumerate(("home", "workplace", "restaurant",
                                  "hospital", "school"))
    }


def test_weekday_children_never_in_restaurants(micro_trace):
    t = micro_trace
    world = t.world
    lo = world.restaurant_offset
    hi = lo + world.n_restaurants
    kinds = all_day_kinds()
    weekday_hours = np.array(
        [kinds[h // 24].value == "weekday" for h in range(N_HOURS)]
    )
    child_places = t.places[:, world.n_adults :]
    in_rest = (child_places >= lo) & (child_places < hi)
    assert not in_rest[weekday_hours].any()


def test_holiday_policy_changes_places():
    world = build_world(tiny_world_config(), CUSTOM, seed=2)
    params = tiny_params()
    base = engine.run(world, params, seed=2)
    flipped = engine.run(
        world, params, seed=2,
        policy=MobilityPolicy(holiday_afternoon_at_work=True),
    )
    kinds = all_day_kinds()
    holiday0 = next(d for d, k in enumerate(kinds) if k.value == "holiday")
    # afternoon hour 14 moves from home to duty for ambulatory agents
    h = holiday0 * 24 + 14
    assert not np.array_equal(base.places[h], flipped.places[h])
    # weekday placement is untouched by the policy given identical draws:
    # visits depend only on keys, so compare a weekday morning hour
    weekday0 = next(d for d, k in enumerate(kinds) if k.value == "weekday")
    hw = weekday0 * 24 + 10
    assert np.array_equal(base.places[hw], flipped.places[hw])


def test_check_trace_all_pass(micro_trace):
    results = check_trace(micro_trace)
    assert len(results) == 10
    failures = [r for r in results if not r.passed]
    assert failures == [], [str(r) for r in failures]


def test_check_trace_all_pass_lethal(lethal_trace):
    failures = [r for r in check_trace(lethal_trace) if not r.passed]
    assert failures == [], [str(r) for r in failures]


def test_summary_frame(micro_trace):
    frame = micro_trace.summary_frame()
    assert list(frame.columns) == [
        "date", "new_infections", "deaths", "hospital_occupancy",
    ]
    assert len(frame) == N_DAYS
    assert frame["date"].iloc[0] == "2022-07-07"
    assert frame["date"].iloc[-1] == "2023-01-22"
    assert frame["new_infections"].sum() == micro_trace.ever_infected().sum()


# --- symptomatic withdrawal and online classes ------------------------------------


def test_minor_cases_spend_whole_days_home():
    world, trace = run_tiny(
        params=tiny_params(
            p_asymptomatic=0.0, p_minor=1.0, p_severe=0.0, alpha_home=0.4
        ),
        seed=5,
    )
    minor_hours = np.repeat(trace.states == int(S.MINOR_SYMPTOMS), 24, axis=0)
    assert minor_hours.sum() > 100
    home = np.concatenate([world.adult_home, world.child_home])
    expected = np.broadcast_to(home, trace.places.shape)
    assert np.array_equal(trace.places[minor_hours], expected[minor_hours])


def test_school_status_gates_weekday_children():
    import dataclasses

    world = build_world(tiny_world_config(), CUSTOM, seed=4)
    world = dataclasses.replace(
        world, school_status=np.array([1, 2], dtype=np.int8)
    )
    trace = engine.run(world, tiny_params(), seed=4)

    n_a = world.n_adults
    status = world.school_status[world.child_school]
    kinds = all_day_kinds()
    weekdays = [d for d, k in enumerate(kinds) if k.name == "WEEKDAY"][:20]
    school_place = world.school_offset + world.child_school
    checked = 0
    for c in range(world.n_children):
        col = trace.places[:, n_a + c]
        for d in weekdays:
            # day-start health drives the day's routine
            if trace.states[d, n_a + c] != int(S.SUSCEPTIBLE):
                continue
            checked += 1
            base = d * 24
            morning = col[base + 9 : base + 12]
            midday = col[base + 12 : base + 17]
            if status[c] == 1:
                assert (morning == school_place[c]).all()
            else:
                assert (morning == world.child_home[c]).all()
            assert (midday == world.child_home[c]).all()
    assert checked > 20


def test_open_schools_keep_children_through_afternoon():
    world, trace = run_tiny(seed=6)
    n_a = world.n_adults
    kinds = all_day_kinds()
    weekdays = [d for d, k in enumerate(kinds) if k.name == "WEEKDAY"][:20]
    school_place = world.school_offset + world.child_school
    checked = 0
    for c in range(world.n_children):
        col = trace.places[:, n_a + c]
        for d in weekdays:
            if trace.states[d, n_a + c] != int(S.SUSCEPTIBLE):
                continue
            checked += 1
            assert (col[d * 24 + 9 : d * 24 + 17] == school_place[c]).all()
    assert checked > 20
