"""World construction: places, people, households, and nearest-k lists.

The world is stored struct-of-arrays for the benefit of the engine; the
arrays are plain numpy and indexed by kind-local ids (home 0..H-1, adult
0..A-1, ...). Places also get a global integer id space, homes first,
used by the engine's hourly place assignment:

    [homes][workplaces][restaurants][hospitals][schools]

Every random placement or assignment is a keyed draw, so building twice
with the same (config, scenario, seed) yields bit-identical worlds.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from wardsim.errors import ConfigurationError, DataError
from wardsim.rng import KeyedRng, Purpose
from wardsim import scenario as scn
from wardsim.scenario import (
    KIND_ADULT,
    KIND_CHILD,
    KIND_HOME,
    KIND_HOSPITAL,
    KIND_RESTAURANT,
    KIND_SCHOOL,
    KIND_WORKPLACE,
    ScenarioConfig,
)

# global-place-id kind codes, in id-space order
PLACE_KIND_HOME = 0
PLACE_KIND_WORKPLACE = 1
PLACE_KIND_RESTAURANT = 2
PLACE_KIND_HOSPITAL = 3
PLACE_KIND_SCHOOL = 4
PLACE_KIND_NAMES = ("home", "workplace", "restaurant", "hospital", "school")

DEAD_PLACE = -1

FEMALE = 0
MALE = 1
SEX_NAMES = ("female", "male")


@dataclass(frozen=True)
class GeoPoint:
    latitude: float
    longitude: float


@dataclass(frozen=True)
class BoundingBox:
    lat_min: float = 35.320
    lat_max: float = 35.410
    lon_min: float = 139.570
    lon_max: float = 139.670

    def validate(self) -> None:
        if not (self.lat_min < self.lat_max and self.lon_min < self.lon_max):
            raise ConfigurationError("world.bounding_box: empty extent")

    def contains(self, lat: float, lon: float) -> bool:
        return (
            self.lat_min <= lat <= self.lat_max
            and self.lon_min <= lon <= self.lon_max
        )


@dataclass(frozen=True)
class WorldConfig:
    adults: int = 62_500
    children: int = 10_000
    homes: int = 50_000
    workplaces: int = 500
    restaurants: int = 100
    hospitals: int = 7
    schools: int = 22
    scale_factor: float = 1.0
    bounding_box: BoundingBox = field(default_factory=BoundingBox)
    adult_age_range: tuple[int, int] = (20, 69)
    child_age_range: tuple[int, int] = (6, 15)
    min_adults_per_home: int = 1
    restaurant_seats: int = 50
    hospital_beds: int = 100
    # optional CSV of real facilities: name,latitude,longitude,kind[,beds]
    facilities_file: str | None = None

    # hospitals and schools keep their configured counts at any scale
    _UNSCALED = ("hospitals", "schools")

    def scaled_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for name in ("adults", "children", "homes", "workplaces", "restaurants",
                     "hospitals", "schools"):
            raw = getattr(self, name)
            if name in self._UNSCALED:
                out[name] = raw
            else:
                scaled = int(round(raw * self.scale_factor))
                # never scale a nonzero count to zero
                out[name] = max(1, scaled) if raw > 0 else 0
        return out

    def validate(self) -> None:
        if self.scale_factor <= 0:
            raise ConfigurationError(
                f"world.scale_factor: {self.scale_factor} must be > 0"
            )
        self.bounding_box.validate()
        counts = self.scaled_counts()
        for name, count in counts.items():
            if name == "children":
                if count < 0:
                    raise ConfigurationError(f"world.children: negative count")
                continue
            if count < 1:
                raise ConfigurationError(
                    f"world.{name}: count is {count} after scaling, need >= 1"
                )
        if self.min_adults_per_home < 1:
            raise ConfigurationError("world.min_adults_per_home: must be >= 1")
        if counts["adults"] < counts["homes"] * self.min_adults_per_home:
            raise ConfigurationError(
                f"world.adults: {counts['adults']} adults cannot give every one of "
                f"{counts['homes']} homes at least {self.min_adults_per_home}"
            )
        for name, (lo, hi) in (
            ("adult_age_range", self.adult_age_range),
            ("child_age_range", self.child_age_range),
        ):
            if lo > hi or lo < 0:
                raise ConfigurationError(f"world.{name}: bad range {lo}..{hi}")
        if self.restaurant_seats < 1:
            raise ConfigurationError("world.restaurant_seats: must be >= 1")
        if self.hospital_beds < 1:
            raise ConfigurationError("world.hospital_beds: must be >= 1")


def nearest_k(
    origin: GeoPoint,
    lats: np.ndarray,
    lons: np.ndarray,
    k: int,
    ref_lat: float | None = None,
) -> np.ndarray:
    """Indices of the k places nearest to origin, ties by ascending index.

    Distances are equirectangular-planar, which is monotone in true
    distance at ward scale and is used only for ordering.
    """
    out = nearest_k_matrix(
        np.asarray([origin.latitude]), np.asarray([origin.longitude]),
        lats, lons, k, ref_lat,
    )
    return out[0]


def nearest_k_matrix(
    origin_lats: np.ndarray,
    origin_lons: np.ndarray,
    lats: np.ndarray,
    lons: np.ndarray,
    k: int,
    ref_lat: float | None = None,
) -> np.ndarray:
    """Row i holds the indices of the k places nearest origin i."""
    if len(lats) < k:
        raise ConfigurationError(
            f"nearest_k: asked for {k} among {len(lats)} places"
        )
    if ref_lat is None:
        ref_lat = float(np.mean(lats)) if len(lats) else 0.0
    coslat = math.cos(math.radians(ref_lat))
    dx = (lons[None, :] - origin_lons[:, None]) * coslat
    dy = lats[None, :] - origin_lats[:, None]
    d2 = dx * dx + dy * dy
    # stable sort keeps equal distances in ascending-index order
    order = np.argsort(d2, axis=1, kind="stable")
    return order[:, :k].astype(np.int32)


def _pad_width(n: int) -> int:
    return len(str(max(n, 1)))


def _name_list(prefix: str, n: int) -> list[str]:
    w = _pad_width(n)
    return [f"{prefix}_{i + 1:0{w}d}" for i in range(n)]


@dataclass
class World:
    """Immutable-by-convention container of all world arrays."""

    config: WorldConfig
    scenario: ScenarioConfig
    seed: int

    home_lat: np.ndarray
    home_lon: np.ndarray
    work_lat: np.ndarray
    work_lon: np.ndarray
    rest_lat: np.ndarray
    rest_lon: np.ndarray
    hosp_lat: np.ndarray
    hosp_lon: np.ndarray
    school_lat: np.ndarray
    school_lon: np.ndarray

    rest_seats: np.ndarray
    rest_status: np.ndarray       # short business hours status, int8 0/1/2
    hosp_beds: np.ndarray
    school_status: np.ndarray     # online class status, int8 0/1/2

    home_nearest_hospitals: np.ndarray    # (H, 3) hospital-local indices
    home_nearest_restaurants: np.ndarray  # (H, 3)
    work_nearest_restaurants: np.ndarray  # (W, 3)

    adult_home: np.ndarray
    adult_workplace: np.ndarray
    adult_age: np.ndarray
    adult_sex: np.ndarray
    adult_height: np.ndarray
    adult_weight: np.ndarray
    adult_vaccinated: np.ndarray
    adult_propensity: np.ndarray

    child_home: np.ndarray
    child_school: np.ndarray
    child_age: np.ndarray
    child_sex: np.ndarray
    child_height: np.ndarray
    child_weight: np.ndarray

    hospital_names: list[str]
    school_names: list[str]

    # --- counts and id spaces -------------------------------------------------

    @property
    def n_homes(self) -> int:
        return len(self.home_lat)

    @property
    def n_workplaces(self) -> int:
        return len(self.work_lat)

    @property
    def n_restaurants(self) -> int:
        return len(self.rest_lat)

    @property
    def n_hospitals(self) -> int:
        return len(self.hosp_lat)

    @property
    def n_schools(self) -> int:
        return len(self.school_lat)

    @property
    def n_adults(self) -> int:
        return len(self.adult_home)

    @property
    def n_children(self) -> int:
        return len(self.child_home)

    @property
    def n_agents(self) -> int:
        return self.n_adults + self.n_children

    @property
    def n_places(self) -> int:
        return (self.n_homes + self.n_workplaces + self.n_restaurants
                + self.n_hospitals + self.n_schools)

    @property
    def workplace_offset(self) -> int:
        return self.n_homes

    @property
    def restaurant_offset(self) -> int:
        return self.n_homes + self.n_workplaces

    @property
    def hospital_offset(self) -> int:
        return self.restaurant_offset + self.n_restaurants

    @property
    def school_offset(self) -> int:
        return self.hospital_offset + self.n_hospitals

    def place_kinds(self) -> np.ndarray:
        """int8 array mapping global place id -> place kind code."""
        kinds = np.empty(self.n_places, dtype=np.int8)
        kinds[: self.workplace_offset] = PLACE_KIND_HOME
        kinds[self.workplace_offset : self.restaurant_offset] = PLACE_KIND_WORKPLACE
        kinds[self.restaurant_offset : self.hospital_offset] = PLACE_KIND_RESTAURANT
        kinds[self.hospital_offset : self.school_offset] = PLACE_KIND_HOSPITAL
        kinds[self.school_offset :] = PLACE_KIND_SCHOOL
        return kinds

    # --- derived structures ---------------------------------------------------

    def workplace_employees(self) -> np.ndarray:
        return np.bincount(self.adult_workplace, minlength=self.n_workplaces)

    def home_members(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """CSR lists of adults and children per home.

        Returns (adult_order, adult_indptr, child_order, child_indptr):
        adults of home h are adult_order[adult_indptr[h]:adult_indptr[h+1]],
        in ascending id order; likewise for children.
        """
        a_order = np.argsort(self.adult_home, kind="stable").astype(np.int32)
        a_indptr = np.zeros(self.n_homes + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.adult_home, minlength=self.n_homes), out=a_indptr[1:])
        c_order = np.argsort(self.child_home, kind="stable").astype(np.int32)
        c_indptr = np.zeros(self.n_homes + 1, dtype=np.int64)
        if self.n_children:
            np.cumsum(
                np.bincount(self.child_home, minlength=self.n_homes), out=c_indptr[1:]
            )
        return a_order, a_indptr, c_order, c_indptr

    # --- naming ---------------------------------------------------------------

    def home_names(self) -> list[str]:
        return _name_list("home", self.n_homes)

    def workplace_names(self) -> list[str]:
        return _name_list("work", self.n_workplaces)

    def restaurant_names(self) -> list[str]:
        return _name_list("rest", self.n_restaurants)

    def adult_names(self) -> list[str]:
        return _name_list("adult", self.n_adults)

    def child_names(self) -> list[str]:
        return _name_list("child", self.n_children)

    def place_names(self) -> list[str]:
        """Names over the global place id space, in id order."""
        return (self.home_names() + self.workplace_names() + self.restaurant_names()
                + list(self.hospital_names) + list(self.school_names))


def _load_facilities(path: str, bbox: BoundingBox, default_beds: int):
    """Parse the optional real-facility CSV into hospital/school entries."""
    hospitals: list[tuple[str, float, float, int]] = []
    schools: list[tuple[str, float, float]] = []
    fpath = Path(path)
    if not fpath.exists():
        raise DataError(f"facilities file not found: {path}")
    with fpath.open("r", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"name", "latitude", "longitude", "kind"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise DataError(
                f"facilities file {path}: needs columns name,latitude,longitude,kind"
            )
        for i, row in enumerate(reader, start=2):
            name = row["name"].strip()
            try:
                lat, lon = float(row["latitude"]), float(row["longitude"])
            except ValueError:
                raise DataError(f"facilities file {path} line {i}: bad coordinates")
            if not bbox.contains(lat, lon):
                raise ConfigurationError(
                    f"facilities file {path} line {i}: {name!r} outside bounding box"
                )
            kind = row["kind"].strip().lower()
            if kind == "hospital":
                beds_raw = (row.get("beds") or "").strip()
                beds = int(beds_raw) if beds_raw else default_beds
                hospitals.append((name, lat, lon, beds))
            elif kind == "school":
                schools.append((name, lat, lon))
            else:
                raise DataError(
                    f"facilities file {path} line {i}: kind must be hospital|school"
                )
    names = [h[0] for h in hospitals] + [s[0] for s in schools]
    if len(set(names)) != len(names):
        raise DataError(f"facilities file {path}: duplicate facility names")
    return hospitals, schools


def _uniform_coords(rng, kind_code, n, lo, hi, axis):
    u = rng.draw_array(Purpose.COORDINATE, kind_code, np.arange(n), axis)
    return lo + u * (hi - lo)


def build_world(config: WorldConfig, scenario: ScenarioConfig, seed: int) -> World:
    """Construct the world deterministically from (config, scenario, seed)."""
    config.validate()
    scenario.validate()
    counts = config.scaled_counts()
    rng = KeyedRng(seed)
    bbox = config.bounding_box

    def coords(kind_code: int, n: int) -> tuple[np.ndarray, np.ndarray]:
        lat = _uniform_coords(rng, kind_code, n, bbox.lat_min, bbox.lat_max, 0)
        lon = _uniform_coords(rng, kind_code, n, bbox.lon_min, bbox.lon_max, 1)
        return lat, lon

    home_lat, home_lon = coords(KIND_HOME, counts["homes"])
    work_lat, work_lon = coords(KIND_WORKPLACE, counts["workplaces"])
    rest_lat, rest_lon = coords(KIND_RESTAURANT, counts["restaurants"])

    if config.facilities_file:
        hosp_rows, school_rows = _load_facilities(
            config.facilities_file, bbox, config.hospital_beds
        )
        if not hosp_rows or not school_rows:
            raise ConfigurationError(
                "world.facilities_file: needs at least one hospital and one school"
            )
        hospital_names = [r[0] for r in hosp_rows]
        hosp_lat = np.array([r[1] for r in hosp_rows])
        hosp_lon = np.array([r[2] for r in hosp_rows])
        hosp_beds = np.array([r[3] for r in hosp_rows], dtype=np.int32)
        school_names = [r[0] for r in school_rows]
        school_lat = np.array([r[1] for r in school_rows])
        school_lon = np.array([r[2] for r in school_rows])
    else:
        hosp_lat, hosp_lon = coords(KIND_HOSPITAL, counts["hospitals"])
        school_lat, school_lon = coords(KIND_SCHOOL, counts["schools"])
        hospital_names = _name_list("hosp", counts["hospitals"])
        school_names = _name_list("school", counts["schools"])
        hosp_beds = np.full(counts["hospitals"], config.hospital_beds, dtype=np.int32)

    n_adults, n_children = counts["adults"], counts["children"]
    n_homes = counts["homes"]
    ref_lat = (bbox.lat_min + bbox.lat_max) / 2.0

    # households: adults round-robin (1-2 per home once adults >= homes)
    adult_home = (np.arange(n_adults) % n_homes).astype(np.int32)
    adult_ids = np.arange(n_adults)
    age_lo, age_hi = config.adult_age_range
    adult_age = rng.draw_int_array(age_lo, age_hi, Purpose.AGE, KIND_ADULT, adult_ids)
    adult_age = adult_age.astype(np.int16)
    adult_sex_u = rng.draw_array(Purpose.SEX, KIND_ADULT, adult_ids)
    adult_sex = np.where(adult_sex_u < 0.5, FEMALE, MALE).astype(np.int8)
    h_mean = np.where(adult_sex == FEMALE, 158.0, 172.0)
    adult_height = rng.draw_normal_array(0.0, 1.0, Purpose.BODY, KIND_ADULT, adult_ids, 0)
    adult_height = np.round(np.clip(h_mean + 6.0 * adult_height, 135.0, 205.0), 1)
    w_mean = np.where(adult_sex == FEMALE, 53.0, 66.0)
    adult_weight = rng.draw_normal_array(0.0, 1.0, Purpose.BODY, KIND_ADULT, adult_ids, 1)
    adult_weight = np.round(np.clip(w_mean + 8.0 * adult_weight, 35.0, 140.0), 1)
    adult_workplace = (
        rng.draw_array(Purpose.WORKPLACE, KIND_ADULT, adult_ids)
        * counts["workplaces"]
    ).astype(np.int32)

    child_ids = np.arange(n_children)
    c_lo, c_hi = config.child_age_range
    child_age = rng.draw_int_array(c_lo, c_hi, Purpose.AGE, KIND_CHILD, child_ids)
    child_age = child_age.astype(np.int16)
    child_sex_u = rng.draw_array(Purpose.SEX, KIND_CHILD, child_ids)
    child_sex = np.where(child_sex_u < 0.5, FEMALE, MALE).astype(np.int8)
    # homes that actually house an adult (all of them when adults >= homes)
    adult_home_set = np.unique(adult_home)
    pick = rng.draw_array(Purpose.CHILD_HOME, KIND_CHILD, child_ids)
    child_home = adult_home_set[(pick * len(adult_home_set)).astype(np.int64)]
    child_home = child_home.astype(np.int32)
    ch_noise = rng.draw_normal_array(0.0, 1.0, Purpose.BODY, KIND_CHILD, child_ids, 0)
    child_height = np.round(
        np.clip(110.0 + 5.5 * (child_age - c_lo) + 5.0 * ch_noise, 80.0, 190.0), 1
    )
    cw_noise = rng.draw_normal_array(0.0, 1.0, Purpose.BODY, KIND_CHILD, child_ids, 1)
    child_weight = np.round(
        np.clip(19.0 + 3.0 * (child_age - c_lo) + 2.5 * cw_noise, 10.0, 90.0), 1
    )

    # child school: the school nearest to the child's home
    home_nearest_school = nearest_k_matrix(
        home_lat, home_lon, school_lat, school_lon, 1, ref_lat
    )[:, 0]
    child_school = home_nearest_school[child_home].astype(np.int32)

    k_hosp = min(3, len(hosp_lat))
    k_rest = min(3, len(rest_lat))
    home_nearest_hospitals = nearest_k_matrix(
        home_lat, home_lon, hosp_lat, hosp_lon, k_hosp, ref_lat
    )
    home_nearest_restaurants = nearest_k_matrix(
        home_lat, home_lon, rest_lat, rest_lon, k_rest, ref_lat
    )
    work_nearest_restaurants = nearest_k_matrix(
        work_lat, work_lon, rest_lat, rest_lon, k_rest, ref_lat
    )

    partition = scn.region_partition(
        scenario, bbox.lat_min, bbox.lat_max, bbox.lon_min, bbox.lon_max
    )
    rest_status, school_status = scn.facility_statuses(
        scenario, partition, rest_lat, rest_lon, school_lat, school_lon, rng
    )
    adult_propensity = scn.visit_propensities(scenario, adult_age, age_lo)
    adult_vaccinated = scn.assign_vaccination(scenario, n_adults, rng)

    return World(
        config=config,
        scenario=scenario,
        seed=seed,
        home_lat=home_lat, home_lon=home_lon,
        work_lat=work_lat, work_lon=work_lon,
        rest_lat=rest_lat, rest_lon=rest_lon,
        hosp_lat=hosp_lat, hosp_lon=hosp_lon,
        school_lat=school_lat, school_lon=school_lon,
        rest_seats=np.full(counts["restaurants"], config.restaurant_seats, np.int32),
        rest_status=rest_status,
        hosp_beds=hosp_beds,
        school_status=school_status,
        home_nearest_hospitals=home_nearest_hospitals,
        home_nearest_restaurants=home_nearest_restaurants,
        work_nearest_restaurants=work_nearest_restaurants,
        adult_home=adult_home,
        adult_workplace=adult_workplace,
        adult_age=adult_age,
        adult_sex=adult_sex,
        adult_height=adult_height,
        adult_weight=adult_weight,
        adult_vaccinated=adult_vaccinated,
        adult_propensity=adult_propensity,
        child_home=child_home,
        child_school=child_school,
        child_age=child_age,
        child_sex=child_sex,
        child_height=child_height,
        child_weight=child_weight,
        hospital_names=hospital_names,
        school_names=school_names,
    )
