"""Run configuration: one YAML file drives a whole run.

The file has six sections (scenario, world, epidemic, mobility, survey,
run), each mapping onto a frozen dataclass. Parsing is strict: an
unknown key anywhere is a ConfigurationError naming the key, so typos
fail loudly instead of silently falling back to defaults.

config_digest() hashes the fully resolved configuration, so a bundle's
manifest can say exactly which settings produced it without carrying
the file around.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, fields, is_dataclass
from enum import Enum
from pathlib import Path

import yaml

from wardsim.dataset import WIDE, LONG, SurveyNoiseParams
from wardsim.epidemic import EpidemicParams
from wardsim.errors import ConfigurationError
from wardsim.mobility import MobilityPolicy
from wardsim.scenario import ScenarioConfig, ScenarioKind
from wardsim.world import BoundingBox, WorldConfig


@dataclass(frozen=True)
class RunSection:
    seed: int = 1
    workers: int = 1
    format: str = WIDE

    def validate(self) -> None:
        if self.workers < 1:
            raise ConfigurationError(f"run.workers: {self.workers} must be >= 1")
        if self.format not in (WIDE, LONG):
            raise ConfigurationError(
                f"run.format: {self.format!r} must be wide or long"
            )


@dataclass(frozen=True)
class SurveySection(SurveyNoiseParams):
    enabled: bool = False


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    world: WorldConfig = field(default_factory=WorldConfig)
    epidemic: EpidemicParams = field(default_factory=EpidemicParams)
    mobility: MobilityPolicy = field(default_factory=MobilityPolicy)
    survey: SurveySection = field(default_factory=SurveySection)
    run: RunSection = field(default_factory=RunSection)

    def validate(self) -> None:
        self.scenario.validate()
        self.world.validate()
        self.epidemic.validate()
        self.survey.validate()
        self.run.validate()

    def survey_params(self) -> SurveyNoiseParams | None:
        if not self.survey.enabled:
            return None
        return SurveyNoiseParams(
            omission_rate=self.survey.omission_rate,
            weight_shift_max=self.survey.weight_shift_max,
            height_round_cm=self.survey.height_round_cm,
            symptom_days_shift=self.survey.symptom_days_shift,
        )


_TUPLE_FIELDS = {
    "alertness": int,
    "exposed_days": int,
    "symptomatic_days": int,
    "symptom_days_shift": int,
    "adult_age_range": int,
    "child_age_range": int,
}


def _nested_classes():
    from wardsim import scenario as scn

    return {
        "bounding_box": BoundingBox,
        "mediator": scn.MediatorKnobs,
        "confounder": scn.ConfounderKnobs,
        "collider": scn.ColliderKnobs,
    }


def _coerce(section: str, name: str, value):
    if value is None:
        return None
    if name == "kind":
        try:
            return ScenarioKind(value)
        except ValueError:
            raise ConfigurationError(f"{section}.kind: unknown value {value!r}")
    if name in _TUPLE_FIELDS:
        if not isinstance(value, (list, tuple)):
            raise ConfigurationError(f"{section}.{name}: expected a list")
        return tuple(_TUPLE_FIELDS[name](v) for v in value)
    if isinstance(value, (dict, list)):
        raise ConfigurationError(f"{section}.{name}: unexpected nested value")
    return value


def _build(section: str, cls, data) -> object:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"{section}: expected a mapping")
    known = {f.name for f in fields(cls)}
    nested = _nested_classes()
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigurationError(f"{section}.{key}: unknown key")
        if key in nested:
            kwargs[key] = _build(f"{section}.{key}", nested[key], value)
        else:
            kwargs[key] = _coerce(section, key, value)
    try:
        return cls(**kwargs)
    except TypeError as e:
        raise ConfigurationError(f"{section}: {e}")


_SECTIONS = (
    ("scenario", ScenarioConfig),
    ("world", WorldConfig),
    ("epidemic", EpidemicParams),
    ("mobility", MobilityPolicy),
    ("survey", SurveySection),
    ("run", RunSection),
)


def parse_config(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigurationError("config: top level must be a mapping")
    known = {name for name, _ in _SECTIONS}
    for key in data:
        if key not in known:
            raise ConfigurationError(f"config.{key}: unknown section")
    parts = {
        name: _build(name, cls, data.get(name)) for name, cls in _SECTIONS
    }
    cfg = RunConfig(**parts)
    cfg.validate()
    return cfg


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigurationError(f"config file not found: {p}")
    with p.open("r", encoding="utf-8") as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as e:
            raise ConfigurationError(f"config file {p}: invalid YAML ({e})")
    return parse_config(data or {})


def _plain(value):
    if isinstance(value, Enum):
        return value.value
    if is_dataclass(value) and not isinstance(value, type):
        return {f.name: _plain(getattr(value, f.name)) for f in fields(value)}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def canonical_dict(cfg: RunConfig) -> dict:
    return _plain(cfg)


def config_digest(cfg: RunConfig) -> str:
    payload = json.dumps(
        canonical_dict(cfg), sort_keys=True, separators=(",", ":")
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


# --- init templates ---------------------------------------------------------------

_COMMON_TAIL = """\
world:
  adults: 62500
  children: 10000
  homes: 50000
  workplaces: 500
  restaurants: 100
  hospitals: 7            # not scaled by scale_factor
  schools: 22             # not scaled by scale_factor
  scale_factor: 1.0       # 0.1 gives a desk-sized run with the same densities
  restaurant_seats: 50
  hospital_beds: 100
  min_adults_per_home: 1
  adult_age_range: [20, 69]
  child_age_range: [6, 15]
  facilities_file: null   # optional CSV: name,latitude,longitude,kind[,beds]
  bounding_box:
    lat_min: 35.32
    lat_max: 35.41
    lon_min: 139.57
    lon_max: 139.67

epidemic:
  alpha_home: 0.03        # per infectious housemate per hour
  alpha_workplace: 0.00017
  alpha_restaurant: 0.012
  alpha_school: 0.0025
  gamma: 0.0              # age exponent; scenarios may override it
  p_asymptomatic: 0.3
  p_minor: 0.6
  p_severe: 0.1
  p_death: 0.2            # among severe cases
  exposed_days: [2, 5]
  symptomatic_days: [3, 7]

mobility:
  holiday_afternoon_at_work: false

survey:
  enabled: false          # when true, adult_information is withheld and a
  omission_rate: 0.03     # noisy questionnaire of the once-symptomatic is
  weight_shift_max: 4.0   # exported instead
  height_round_cm: 5
  symptom_days_shift: [-2, 1]

run:
  seed: 1
  workers: 1              # determinism does not depend on this
  format: wide            # wide or long
"""

_SCENARIO_HEADS = {
    ScenarioKind.MEDIATOR: """\
# Restaurant habits fall with age; age itself has no effect on
# susceptibility. Any raw age gradient is carried entirely by visits.
scenario:
  kind: mediator
  hint_level: 0
  vaccination_prob: 0.3
  visit_propensity: 0.3   # unused by this kind; its own rule applies
  mediator:
    base_propensity: 0.6
    per_year_decrement: 0.01
    floor: 0.05
""",
    ScenarioKind.CONFOUNDER: """\
# Regional alertness closes restaurants and moves schools online
# together, and restaurants transmit nothing here. Any association
# between nearby restaurant hours and infection is regional policy.
scenario:
  kind: confounder
  hint_level: 0
  vaccination_prob: 0.3
  visit_propensity: 0.3
  confounder:
    regions_x: 2
    regions_y: 2
    alertness: [0, 1, 2, 1]
    status_noise: 0.1
""",
    ScenarioKind.COLLIDER: """\
# Vaccination is a fair coin and cuts infection risk to a tenth; age
# raises susceptibility. Conditioning on being infected distorts the
# vaccination-by-age picture.
scenario:
  kind: collider
  hint_level: 0
  vaccination_prob: 0.3   # unused by this kind; its own rule applies
  visit_propensity: 0.3
  collider:
    vaccination_prob: 0.5
    gamma: 0.2
""",
    ScenarioKind.CUSTOM: """\
# No scenario overrides: every knob below acts exactly as written.
scenario:
  kind: custom
  hint_level: 0
  vaccination_prob: 0.3
  visit_propensity: 0.3
""",
}


def template_text(kind: ScenarioKind) -> str:
    return _SCENARIO_HEADS[kind] + "\n" + _COMMON_TAIL


def write_template(kind: ScenarioKind, path: str | Path, force: bool = False) -> None:
    p = Path(path)
    if p.exists() and not force:
        raise ConfigurationError(
            f"refusing to overwrite {p}; pass force to replace it"
        )
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(template_text(kind), encoding="utf-8")
