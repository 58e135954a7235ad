"""Scenario knobs: propensities, vaccination, regional statuses, overrides."""

from __future__ import annotations

import numpy as np
import pytest
from scipy import stats

from conftest import replace
from wardsim.epidemic import EpidemicParams
from wardsim.rng import KeyedRng
from wardsim.errors import ConfigurationError
from wardsim.scenario import (
    ColliderKnobs,
    ConfounderKnobs,
    MediatorKnobs,
    RegionPartition,
    ScenarioConfig,
    ScenarioKind,
    adjust_params,
    assign_vaccination,
    facility_statuses,
    region_partition,
    visit_propensities,
)

K = ScenarioKind


def scenario(kind: ScenarioKind, **kw) -> ScenarioConfig:
    return ScenarioConfig(kind=kind, **kw)


# --- visit propensities -------------------------------------------------------


def test_mediator_propensity_exact_values():
    ages = np.array([20, 21, 30, 45, 69])
    got = visit_propensities(scenario(K.MEDIATOR), ages, 20)
    want = np.array([0.6, 0.59, 0.5, 0.35, 0.6 - 0.01 * 49])
    assert np.allclose(got, want, atol=1e-12)


def test_mediator_propensity_floor():
    knobs = MediatorKnobs(base_propensity=0.3, per_year_decrement=0.02, floor=0.05)
    cfg = scenario(K.MEDIATOR, mediator=knobs)
    ages = np.array([20, 32, 33, 69])
    got = visit_propensities(cfg, ages, 20)
    # 0.3 - 0.02*(age-20) clipped below at 0.05
    assert np.allclose(got, [0.3, 0.06, 0.05, 0.05], atol=1e-12)


@pytest.mark.parametrize("kind", [K.CONFOUNDER, K.COLLIDER, K.CUSTOM])
def test_non_mediator_propensity_constant(kind):
    cfg = scenario(kind, visit_propensity=0.25)
    got = visit_propensities(cfg, np.array([20, 45, 69]), 20)
    assert (got == 0.25).all()


# --- vaccination ---------------------------------------------------------------


def test_vaccination_rate_near_target():
    rng = KeyedRng(4)
    n = 20_000
    got = assign_vaccination(scenario(K.COLLIDER), n, rng)
    se = np.sqrt(0.5 * 0.5 / n)
    assert abs(got.mean() - 0.5) < 3.5 * se
    other = assign_vaccination(scenario(K.MEDIATOR), n, rng)
    se = np.sqrt(0.3 * 0.7 / n)
    assert abs(other.mean() - 0.3) < 3.5 * se


def test_vaccination_deterministic():
    a = assign_vaccination(scenario(K.COLLIDER), 500, KeyedRng(9))
    b = assign_vaccination(scenario(K.COLLIDER), 500, KeyedRng(9))
    assert np.array_equal(a, b)


def test_vaccination_independent_of_age():
    # vaccination flags and ages come from different key purposes; a
    # contingency test over age decades should find no association
    rng = KeyedRng(11)
    n = 20_000
    vac = assign_vaccination(scenario(K.COLLIDER), n, rng)
    from wardsim.rng import Purpose
    from wardsim.scenario import KIND_ADULT

    ages = rng.draw_int_array(20, 69, Purpose.AGE, KIND_ADULT, np.arange(n))
    table = np.zeros((2, 5), dtype=np.int64)
    decade = (ages - 20) // 10
    for v in (0, 1):
        table[v] = np.bincount(decade[vac == bool(v)], minlength=5)
    _, p, _, _ = stats.chi2_contingency(table)
    assert p > 1e-3


def test_effective_vaccination_prob():
    assert scenario(K.COLLIDER).effective_vaccination_prob == 0.5
    assert scenario(K.MEDIATOR).effective_vaccination_prob == 0.3
    pinned = scenario(K.COLLIDER, collider=ColliderKnobs(vaccination_prob=0.8))
    assert pinned.effective_vaccination_prob == 0.8


# --- regions and statuses --------------------------------------------------------


def _partition() -> RegionPartition:
    return RegionPartition(
        lat_min=35.0, lat_max=36.0, lon_min=139.0, lon_max=140.0,
        nx=2, ny=2, alertness=(0, 1, 2, 1),
    )


def test_region_of_grid_corners():
    part = _partition()
    # row-major: region = iy*nx + ix; iy from latitude, ix from longitude
    assert part.region_of(35.1, 139.1) == 0
    assert part.region_of(35.1, 139.9) == 1
    assert part.region_of(35.9, 139.1) == 2
    assert part.region_of(35.9, 139.9) == 3
    # the max edge clips into the last cell
    assert part.region_of(36.0, 140.0) == 3


def test_alertness_of_array():
    part = _partition()
    lats = np.array([35.1, 35.1, 35.9, 35.9])
    lons = np.array([139.1, 139.9, 139.1, 139.9])
    assert list(part.alertness_of_array(lats, lons)) == [0, 1, 2, 1]


def test_region_partition_only_for_confounder():
    assert region_partition(scenario(K.MEDIATOR), 35, 36, 139, 140) is None
    part = region_partition(scenario(K.CONFOUNDER), 35, 36, 139, 140)
    assert part is not None
    assert part.nx == 2 and part.ny == 2


@pytest.mark.parametrize("kind", [K.MEDIATOR, K.COLLIDER, K.CUSTOM])
def test_statuses_zero_outside_confounder(kind):
    rest, school = facility_statuses(
        scenario(kind), None,
        np.array([35.1, 35.9]), np.array([139.1, 139.9]),
        np.array([35.5]), np.array([139.5]),
        KeyedRng(1),
    )
    assert (rest == 0).all() and (school == 0).all()


def test_confounder_statuses_follow_alertness_when_noiseless():
    cfg = scenario(K.CONFOUNDER, confounder=ConfounderKnobs(status_noise=0.0))
    part = region_partition(cfg, 35.0, 36.0, 139.0, 140.0)
    rest_lat = np.array([35.1, 35.1, 35.9, 35.9])
    rest_lon = np.array([139.1, 139.9, 139.1, 139.9])
    school_lat = np.array([35.9])
    school_lon = np.array([139.1])
    rest, school = facility_statuses(
        cfg, part, rest_lat, rest_lon, school_lat, school_lon, KeyedRng(2)
    )
    assert list(rest) == [0, 1, 2, 1]
    assert list(school) == [2]


def test_confounder_status_noise_flips_to_other_levels():
    noise = 0.5
    cfg = scenario(K.CONFOUNDER, confounder=ConfounderKnobs(status_noise=noise))
    base_cfg = scenario(K.CONFOUNDER, confounder=ConfounderKnobs(status_noise=0.0))
    part = region_partition(cfg, 35.0, 36.0, 139.0, 140.0)
    n = 8000
    rs = np.random.RandomState(0)
    lat = 35.0 + rs.rand(n)
    lon = 139.0 + rs.rand(n)
    school_lat = np.array([35.5])
    school_lon = np.array([139.5])
    rng = KeyedRng(5)
    noisy, _ = facility_statuses(cfg, part, lat, lon, school_lat, school_lon, rng)
    base, _ = facility_statuses(
        base_cfg, part, lat, lon, school_lat, school_lon, KeyedRng(5)
    )
    flipped = noisy != base
    se = np.sqrt(noise * (1 - noise) / n)
    assert abs(flipped.mean() - noise) < 3.5 * se
    # flips land on one of the other two levels, never off the scale
    assert set(np.unique(noisy)) <= {0, 1, 2}
    for b in (0, 1, 2):
        sel = flipped & (base == b)
        if sel.any():
            assert b not in set(np.unique(noisy[sel]))


def test_statuses_deterministic():
    cfg = scenario(K.CONFOUNDER)
    part = region_partition(cfg, 35.0, 36.0, 139.0, 140.0)
    args = (
        np.array([35.2, 35.8]), np.array([139.2, 139.8]),
        np.array([35.5]), np.array([139.5]),
    )
    a = facility_statuses(cfg, part, *args, KeyedRng(3))
    b = facility_statuses(cfg, part, *args, KeyedRng(3))
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


# --- validation and parameter overrides -----------------------------------------


@pytest.mark.parametrize(
    "cfg, needle",
    [
        (scenario(K.CUSTOM, hint_level=3), "hint_level"),
        (scenario(K.CUSTOM, visit_propensity=1.5), "visit_propensity"),
        (scenario(K.CUSTOM, vaccination_prob=-0.1), "vaccination_prob"),
        (
            scenario(K.COLLIDER, collider=ColliderKnobs(gamma=0.0)),
            "collider.gamma",
        ),
        (
            scenario(K.CONFOUNDER, confounder=ConfounderKnobs(alertness=(0, 1))),
            "alertness",
        ),
        (
            scenario(
                K.CONFOUNDER, confounder=ConfounderKnobs(alertness=(0, 1, 2, 5))
            ),
            "alertness",
        ),
        (
            scenario(
                K.MEDIATOR,
                mediator=MediatorKnobs(per_year_decrement=-0.01),
            ),
            "per_year_decrement",
        ),
    ],
)
def test_validation_errors(cfg, needle):
    with pytest.raises(ConfigurationError, match=needle):
        cfg.validate()


def test_default_scenarios_valid():
    for kind in K:
        scenario(kind).validate()


def test_adjust_params_per_kind():
    base = EpidemicParams(gamma=0.9, alpha_restaurant=0.07)
    med = adjust_params(scenario(K.MEDIATOR), base)
    assert med.gamma == 0.0 and med.alpha_restaurant == 0.07
    con = adjust_params(scenario(K.CONFOUNDER), base)
    assert con.gamma == 0.0 and con.alpha_restaurant == 0.0
    col = adjust_params(scenario(K.COLLIDER), base)
    assert col.gamma == 0.2 and col.alpha_restaurant == 0.07
    cus = adjust_params(scenario(K.CUSTOM), base)
    assert cus is base
