"""Shared fixtures: tiny worlds that run in well under a second."""

from __future__ import annotations

import dataclasses

import pytest

from wardsim import engine
from wardsim.dataset import LONG, WIDE, export_bundle
from wardsim.epidemic import EpidemicParams
from wardsim.scenario import ScenarioConfig, ScenarioKind, adjust_params
from wardsim.world import WorldConfig, build_world

TINY_WORLD = dict(
    adults=40,
    children=12,
    homes=25,
    workplaces=2,
    restaurants=3,
    hospitals=3,
    schools=2,
    restaurant_seats=5,
    hospital_beds=2,
)

TINY_PARAMS = dict(
    alpha_home=0.2,
    alpha_workplace=0.01,
    alpha_restaurant=0.05,
    alpha_school=0.05,
)


def tiny_world_config(**over) -> WorldConfig:
    merged = {**TINY_WORLD, **over}
    return WorldConfig(**merged)


def tiny_params(**over) -> EpidemicParams:
    merged = {**TINY_PARAMS, **over}
    return EpidemicParams(**merged)


def run_tiny(
    scenario: ScenarioConfig | None = None,
    params: EpidemicParams | None = None,
    seed: int = 1,
    world_over: dict | None = None,
    policy=None,
):
    scenario = scenario or ScenarioConfig(kind=ScenarioKind.CUSTOM)
    params = params or tiny_params()
    cfg = tiny_world_config(**(world_over or {}))
    world = build_world(cfg, scenario, seed)
    trace = engine.run(
        world, adjust_params(scenario, params), seed, policy=policy
    )
    return world, trace


@pytest.fixture(scope="session")
def micro_trace():
    """One shared custom-scenario run over the tiny world."""
    _, trace = run_tiny(seed=7)
    return trace


@pytest.fixture(scope="session")
def micro_bundle_wide(micro_trace, tmp_path_factory):
    out = tmp_path_factory.mktemp("bundles") / "wide"
    export_bundle(micro_trace, out, fmt=WIDE)
    return out


@pytest.fixture(scope="session")
def micro_bundle_long(micro_trace, tmp_path_factory):
    out = tmp_path_factory.mktemp("bundles") / "long"
    export_bundle(micro_trace, out, fmt=LONG)
    return out


@pytest.fixture(scope="session")
def lethal_trace():
    """Every case turns severe and dies; exercises hospitals and deaths."""
    params = tiny_params(
        p_asymptomatic=0.0, p_minor=0.0, p_severe=1.0, p_death=1.0,
        alpha_home=0.5,
    )
    _, trace = run_tiny(params=params, seed=11)
    return trace


def replace(obj, **kw):
    return dataclasses.replace(obj, **kw)
