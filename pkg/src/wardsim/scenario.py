"""Scenario parameterizations: mediator, confounder, collider, custom.

A scenario rewires a small set of world attributes and epidemic
parameters so that the exported dataset exhibits one causal structure:

* mediator:   age -> restaurant visits -> infection (no direct age effect)
* confounder: regional alertness -> both closures and school hours; the
              restaurant channel itself is causally dead (alpha 0)
* collider:   age -> infection <- vaccination, with vaccination assigned
              independently of age

Everything random here flows through keyed draws, so a (config, seed)
pair always produces the same world.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from wardsim.errors import ConfigurationError
from wardsim.rng import KeyedRng, Purpose

# key-space codes for entity kinds, shared with world construction
KIND_HOME = 0
KIND_WORKPLACE = 1
KIND_RESTAURANT = 2
KIND_HOSPITAL = 3
KIND_SCHOOL = 4
KIND_ADULT = 5
KIND_CHILD = 6

STATUS_ZERO = 0
STATUS_ONE = 1
STATUS_TWO = 2


class ScenarioKind(str, Enum):
    MEDIATOR = "mediator"
    CONFOUNDER = "confounder"
    COLLIDER = "collider"
    CUSTOM = "custom"


@dataclass(frozen=True)
class MediatorKnobs:
    """Age-decreasing visit propensity: base - decrement*(age - age_lo)."""

    base_propensity: float = 0.6
    per_year_decrement: float = 0.01
    floor: float = 0.05


@dataclass(frozen=True)
class ConfounderKnobs:
    regions_x: int = 2
    regions_y: int = 2
    # row-major over the grid, one alertness level in {0,1,2} per region
    alertness: tuple[int, ...] = (0, 1, 2, 1)
    status_noise: float = 0.1


@dataclass(frozen=True)
class ColliderKnobs:
    vaccination_prob: float = 0.5
    gamma: float = 0.2


@dataclass(frozen=True)
class ScenarioConfig:
    kind: ScenarioKind = ScenarioKind.CUSTOM
    hint_level: int = 0
    # constant visit propensity for kinds without an age-linked one
    visit_propensity: float = 0.3
    # vaccination probability for kinds that don't pin their own
    vaccination_prob: float = 0.3
    mediator: MediatorKnobs = field(default_factory=MediatorKnobs)
    confounder: ConfounderKnobs = field(default_factory=ConfounderKnobs)
    collider: ColliderKnobs = field(default_factory=ColliderKnobs)

    def validate(self) -> None:
        if not isinstance(self.kind, ScenarioKind):
            raise ConfigurationError(f"scenario.kind: unknown value {self.kind!r}")
        if self.hint_level not in (0, 1, 2):
            raise ConfigurationError(
                f"scenario.hint_level: {self.hint_level} not in 0..2"
            )
        for name, value in (
            ("scenario.visit_propensity", self.visit_propensity),
            ("scenario.vaccination_prob", self.vaccination_prob),
            ("scenario.mediator.base_propensity", self.mediator.base_propensity),
            ("scenario.mediator.floor", self.mediator.floor),
            ("scenario.confounder.status_noise", self.confounder.status_noise),
            ("scenario.collider.vaccination_prob", self.collider.vaccination_prob),
        ):
            if not 0.0 <= value <= 1.0:
                raise ConfigurationError(f"{name}: {value} not in [0, 1]")
        if self.mediator.per_year_decrement < 0:
            raise ConfigurationError(
                "scenario.mediator.per_year_decrement: must be >= 0"
            )
        if self.collider.gamma <= 0:
            raise ConfigurationError(
                f"scenario.collider.gamma: {self.collider.gamma} must be > 0"
            )
        knobs = self.confounder
        if knobs.regions_x < 1 or knobs.regions_y < 1:
            raise ConfigurationError("scenario.confounder.regions: need >= 1 per axis")
        if len(knobs.alertness) != knobs.regions_x * knobs.regions_y:
            raise ConfigurationError(
                "scenario.confounder.alertness: expected "
                f"{knobs.regions_x * knobs.regions_y} levels, got {len(knobs.alertness)}"
            )
        if any(a not in (0, 1, 2) for a in knobs.alertness):
            raise ConfigurationError(
                "scenario.confounder.alertness: levels must be in {0, 1, 2}"
            )

    @property
    def effective_vaccination_prob(self) -> float:
        if self.kind is ScenarioKind.COLLIDER:
            return self.collider.vaccination_prob
        return self.vaccination_prob


@dataclass(frozen=True)
class RegionPartition:
    """Axis-aligned grid over the bounding box; regions in row-major order."""

    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float
    nx: int
    ny: int
    alertness: tuple[int, ...]

    def region_of(self, lat: float, lon: float) -> int:
        return int(self.region_of_array(np.asarray([lat]), np.asarray([lon]))[0])

    def region_of_array(self, lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
        ix = ((lons - self.lon_min) / (self.lon_max - self.lon_min) * self.nx).astype(
            np.int64
        )
        iy = ((lats - self.lat_min) / (self.lat_max - self.lat_min) * self.ny).astype(
            np.int64
        )
        np.clip(ix, 0, self.nx - 1, out=ix)
        np.clip(iy, 0, self.ny - 1, out=iy)
        return iy * self.nx + ix

    def alertness_of_array(self, lats: np.ndarray, lons: np.ndarray) -> np.ndarray:
        levels = np.asarray(self.alertness, dtype=np.int8)
        return levels[self.region_of_array(lats, lons)]


def visit_propensities(
    scenario: ScenarioConfig, ages: np.ndarray, age_lo: int
) -> np.ndarray:
    """Per-adult visit propensity for one slot opportunity."""
    if scenario.kind is ScenarioKind.MEDIATOR:
        knobs = scenario.mediator
        raw = knobs.base_propensity - knobs.per_year_decrement * (ages - age_lo)
        return np.clip(raw, knobs.floor, 1.0)
    return np.full(ages.shape, scenario.visit_propensity, dtype=np.float64)


def assign_vaccination(
    scenario: ScenarioConfig, n_adults: int, rng: KeyedRng
) -> np.ndarray:
    """Independent per-adult vaccination flags."""
    u = rng.draw_array(Purpose.VACCINATION, KIND_ADULT, np.arange(n_adults))
    return u < scenario.effective_vaccination_prob


def _noisy_statuses(
    base: np.ndarray, kind_code: int, noise: float, rng: KeyedRng
) -> np.ndarray:
    """Flip each status to one of the other two with probability `noise`."""
    if noise <= 0.0:
        return base
    idx = np.arange(base.shape[0])
    flip = rng.draw_array(Purpose.STATUS_NOISE, kind_code, idx, 0) < noise
    pick = rng.draw_array(Purpose.STATUS_NOISE, kind_code, idx, 1)
    # the two statuses other than base[i], in ascending order
    lo = np.where(base == 0, 1, 0)
    hi = np.where(base == 2, 1, 2)
    flipped = np.where(pick < 0.5, lo, hi).astype(np.int8)
    return np.where(flip, flipped, base).astype(np.int8)


def facility_statuses(
    scenario: ScenarioConfig,
    partition: RegionPartition | None,
    rest_lat: np.ndarray,
    rest_lon: np.ndarray,
    school_lat: np.ndarray,
    school_lon: np.ndarray,
    rng: KeyedRng,
) -> tuple[np.ndarray, np.ndarray]:
    """Short-hours statuses for restaurants and online statuses for schools."""
    if scenario.kind is ScenarioKind.CONFOUNDER:
        assert partition is not None
        noise = scenario.confounder.status_noise
        rest = partition.alertness_of_array(rest_lat, rest_lon).astype(np.int8)
        school = partition.alertness_of_array(school_lat, school_lon).astype(np.int8)
        rest = _noisy_statuses(rest, KIND_RESTAURANT, noise, rng)
        school = _noisy_statuses(school, KIND_SCHOOL, noise, rng)
        return rest, school
    zero_r = np.zeros(rest_lat.shape[0], dtype=np.int8)
    zero_s = np.zeros(school_lat.shape[0], dtype=np.int8)
    return zero_r, zero_s


def region_partition(
    scenario: ScenarioConfig, lat_min: float, lat_max: float, lon_min: float, lon_max: float
) -> RegionPartition | None:
    if scenario.kind is not ScenarioKind.CONFOUNDER:
        return None
    knobs = scenario.confounder
    return RegionPartition(
        lat_min=lat_min,
        lat_max=lat_max,
        lon_min=lon_min,
        lon_max=lon_max,
        nx=knobs.regions_x,
        ny=knobs.regions_y,
        alertness=tuple(knobs.alertness),
    )


def adjust_params(scenario: ScenarioConfig, params):
    """Scenario overrides of epidemic parameters (gamma, restaurant alpha).

    Returns a new EpidemicParams; custom scenarios pass through unchanged.
    """
    from dataclasses import replace

    if scenario.kind is ScenarioKind.MEDIATOR:
        return replace(params, gamma=0.0)
    if scenario.kind is ScenarioKind.CONFOUNDER:
        return replace(params, gamma=0.0, alpha_restaurant=0.0)
    if scenario.kind is ScenarioKind.COLLIDER:
        return replace(params, gamma=scenario.collider.gamma)
    return params
