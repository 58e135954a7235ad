"""Deterministic ward-scale epidemic datasets for teaching causal pitfalls.

The package simulates 200 days of hourly life in a small fictional ward,
exports the result as learner-facing CSV bundles, and ships the analyses
and checks that demonstrate each scenario's intended statistical trap.
"""

from wardsim._version import __version__
from wardsim.analysis import Bundle, RateTable, run_analysis
from wardsim.config import RunConfig, config_digest, load_config, parse_config
from wardsim.dataset import SurveyNoiseParams, export_bundle, read_manifest
from wardsim.engine import Simulation, SimulationTrace, run
from wardsim.epidemic import EpidemicParams, InfectionState
from wardsim.errors import (
    CheckFailure,
    ConfigurationError,
    DataError,
    TemplateIntegrityError,
    WardsimError,
)
from wardsim.mobility import MobilityPolicy
from wardsim.scenario import ScenarioConfig, ScenarioKind
from wardsim.story import render_story
from wardsim.verify import check_bundle, check_trace
from wardsim.world import BoundingBox, World, WorldConfig, build_world


def simulate(config: RunConfig, progress=None) -> SimulationTrace:
    """Run one configured simulation end to end, without exporting."""
    from wardsim.scenario import adjust_params

    config.validate()
    world = build_world(config.world, config.scenario, config.run.seed)
    params = adjust_params(config.scenario, config.epidemic)
    return run(
        world,
        params,
        config.run.seed,
        policy=config.mobility,
        workers=config.run.workers,
        progress=progress,
    )


__all__ = [
    "__version__",
    "Bundle",
    "BoundingBox",
    "CheckFailure",
    "ConfigurationError",
    "DataError",
    "EpidemicParams",
    "InfectionState",
    "MobilityPolicy",
    "RateTable",
    "RunConfig",
    "ScenarioConfig",
    "ScenarioKind",
    "Simulation",
    "SimulationTrace",
    "SurveyNoiseParams",
    "TemplateIntegrityError",
    "WardsimError",
    "World",
    "WorldConfig",
    "build_world",
    "check_bundle",
    "check_trace",
    "config_digest",
    "export_bundle",
    "load_config",
    "parse_config",
    "read_manifest",
    "render_story",
    "run",
    "run_analysis",
    "simulate",
]
