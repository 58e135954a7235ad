"""Exported tables: the files a learner actually gets.

A bundle is a directory of CSV files plus a manifest.json, written from
a finished SimulationTrace. Two layouts exist. "wide" mirrors a
spreadsheet: status tables are date x agent, place tables are
(date, hour) x agent, with a literal "dead" in place cells of dead
agents. "long" is tidy: one observation per row, and rows for dead
agents are simply absent from place tables. The two are lossless
conversions of each other.

The optional questionnaire replaces adult_information with a noisy
self-reported version covering only adults who ever showed symptoms;
when it is enabled the clean adult table is withheld from the bundle.

manifest.json is written last, so its presence marks a complete bundle.
It carries no timestamps; rebuilding the same run yields byte-identical
files.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from wardsim import clock
from wardsim._version import __version__
from wardsim.engine import SimulationTrace
from wardsim.epidemic import STATE_CODES, STATE_NAMES, InfectionState
from wardsim.errors import ConfigurationError, DataError
from wardsim.mobility import hour_slots
from wardsim.rng import KeyedRng, Purpose

SCHEMA_VERSION = "1"
WIDE = "wide"
LONG = "long"
DEAD_TOKEN = "dead"

LEARNER_TABLES = (
    "home_information",
    "workplace_information",
    "restaurant_information",
    "hospital_information",
    "school_information",
    "adult_information",
    "child_information",
    "adult_status",
    "child_status",
    "adult_place",
    "child_place",
)

QUESTIONNAIRE_TABLE = "questionnaire"

# questionnaire fields that may be left blank, in key order
OMISSIBLE_FIELDS = (
    "workplace",
    "age",
    "sex",
    "height",
    "weight",
    "vaccination",
    "symptom_days",
)

_SEX_LABELS = ("female", "male")


@dataclass(frozen=True)
class SurveyNoiseParams:
    omission_rate: float = 0.03
    weight_shift_max: float = 4.0
    height_round_cm: int = 5
    symptom_days_shift: tuple[int, int] = (-2, 1)

    def validate(self) -> None:
        if not 0.0 <= self.omission_rate < 1.0:
            raise ConfigurationError(
                f"survey.omission_rate: {self.omission_rate} outside [0, 1)"
            )
        if self.weight_shift_max < 0:
            raise ConfigurationError("survey.weight_shift_max: must be >= 0")
        if self.height_round_cm < 1:
            raise ConfigurationError("survey.height_round_cm: must be >= 1")
        lo, hi = self.symptom_days_shift
        if lo > hi:
            raise ConfigurationError(
                f"survey.symptom_days_shift: bad range {lo}..{hi}"
            )


def _round1(values: np.ndarray) -> np.ndarray:
    return np.round(values.astype(np.float64), 1)


def _info_frames(trace: SimulationTrace) -> dict[str, pd.DataFrame]:
    w = trace.world
    out: dict[str, pd.DataFrame] = {}
    out["home_information"] = pd.DataFrame(
        {
            "name": w.home_names(),
            "latitude": np.round(w.home_lat, 6),
            "longitude": np.round(w.home_lon, 6),
        }
    )
    out["workplace_information"] = pd.DataFrame(
        {
            "name": w.workplace_names(),
            "latitude": np.round(w.work_lat, 6),
            "longitude": np.round(w.work_lon, 6),
        }
    )
    out["restaurant_information"] = pd.DataFrame(
        {
            "name": w.restaurant_names(),
            "latitude": np.round(w.rest_lat, 6),
            "longitude": np.round(w.rest_lon, 6),
            "seats": w.rest_seats,
            "status": w.rest_status,
        }
    )
    out["hospital_information"] = pd.DataFrame(
        {
            "name": list(w.hospital_names),
            "latitude": np.round(w.hosp_lat, 6),
            "longitude": np.round(w.hosp_lon, 6),
            "beds": w.hosp_beds,
        }
    )
    out["school_information"] = pd.DataFrame(
        {
            "name": list(w.school_names),
            "latitude": np.round(w.school_lat, 6),
            "longitude": np.round(w.school_lon, 6),
            "status": w.school_status,
        }
    )
    home_names = np.asarray(w.home_names(), dtype=object)
    work_names = np.asarray(w.workplace_names(), dtype=object)
    school_names = np.asarray(w.school_names, dtype=object)
    out["adult_information"] = pd.DataFrame(
        {
            "name": w.adult_names(),
            "home": home_names[w.adult_home],
            "workplace": work_names[w.adult_workplace],
            "age": w.adult_age,
            "sex": [_SEX_LABELS[s] for s in w.adult_sex],
            "height": _round1(w.adult_height),
            "weight": _round1(w.adult_weight),
            "vaccination": w.adult_vaccinated.astype(np.int8),
        }
    )
    out["child_information"] = pd.DataFrame(
        {
            "name": w.child_names(),
            "home": home_names[w.child_home] if w.n_children else [],
            "school": school_names[w.child_school] if w.n_children else [],
            "age": w.child_age,
            "sex": [_SEX_LABELS[s] for s in w.child_sex],
            "height": _round1(w.child_height),
            "weight": _round1(w.child_weight),
        }
    )
    return out


def _agent_slice(trace: SimulationTrace, group: str) -> tuple[slice, list[str]]:
    w = trace.world
    if group == "adult":
        return slice(0, w.n_adults), w.adult_names()
    return slice(w.n_adults, w.n_agents), w.child_names()


def _write_wide_status(path: Path, trace: SimulationTrace, group: str) -> int:
    sel, names = _agent_slice(trace, group)
    dates = [d.isoformat() for d in clock.all_dates()]
    labels = np.asarray(STATE_NAMES, dtype=object)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write("date," + ",".join(names) + "\n")
        for d in range(trace.n_days):
            row = labels[trace.states[d, sel]]
            fh.write(dates[d] + "," + ",".join(row) + "\n")
    return trace.n_days


def _write_wide_place(path: Path, trace: SimulationTrace, group: str) -> int:
    sel, names = _agent_slice(trace, group)
    dates = [d.isoformat() for d in clock.all_dates()]
    kinds = clock.all_day_kinds()
    place_labels = np.asarray(
        trace.world.place_names() + [DEAD_TOKEN], dtype=object
    )
    n_places = trace.world.n_places
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write("date,hour," + ",".join(names) + "\n")
        for d in range(trace.n_days):
            # places are constant within a slot, so join each row once
            slots = hour_slots(kinds[d])
            cache: dict[int, str] = {}
            datestr = dates[d]
            for h in range(24):
                s = int(slots[h])
                body = cache.get(s)
                if body is None:
                    row = trace.places[d * 24 + h, sel]
                    idx = np.where(row < 0, n_places, row)
                    body = ",".join(place_labels[idx])
                    cache[s] = body
                fh.write(f"{datestr},{h},{body}\n")
    return trace.n_hours


def _write_long_status(path: Path, trace: SimulationTrace, group: str) -> int:
    sel, names = _agent_slice(trace, group)
    n = len(names)
    dates = np.asarray([d.isoformat() for d in clock.all_dates()], dtype=object)
    labels = np.asarray(STATE_NAMES, dtype=object)
    frame = pd.DataFrame(
        {
            "date": np.repeat(dates, n),
            group: np.tile(np.asarray(names, dtype=object), trace.n_days),
            "status": labels[trace.states[:, sel].reshape(-1)],
        }
    )
    frame.to_csv(path, index=False)
    return len(frame)


def _write_long_place(path: Path, trace: SimulationTrace, group: str) -> int:
    sel, names = _agent_slice(trace, group)
    n = len(names)
    name_arr = np.asarray(names, dtype=object)
    dates = np.asarray([d.isoformat() for d in clock.all_dates()], dtype=object)
    place_labels = np.asarray(trace.world.place_names(), dtype=object)
    rows = 0
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(f"date,hour,{group},place\n")
        if n:
            for d in range(trace.n_days):
                block = trace.places[d * 24 : (d + 1) * 24, sel]
                hours, agents = np.nonzero(block >= 0)
                pl = block[hours, agents]
                chunk = pd.DataFrame(
                    {
                        "date": np.repeat(dates[d], len(hours)),
                        "hour": hours,
                        group: name_arr[agents],
                        "place": place_labels[pl],
                    }
                )
                chunk.to_csv(fh, index=False, header=False)
                rows += len(chunk)
    return rows


def build_questionnaire(
    trace: SimulationTrace, survey: SurveyNoiseParams
) -> pd.DataFrame:
    """Noisy self-reports from adults who ever had symptoms."""
    survey.validate()
    w = trace.world
    n_adults = w.n_adults
    sick = (
        (trace.states[:, :n_adults] == int(InfectionState.MINOR_SYMPTOMS))
        | (trace.states[:, :n_adults] == int(InfectionState.SEVERE_SYMPTOMS))
    )
    rows = np.flatnonzero(sick.any(axis=0))
    sym_days = sick[:, rows].sum(axis=0).astype(np.int64)

    rng = KeyedRng(trace.seed)
    w_shift = survey.weight_shift_max * rng.draw_array(Purpose.SURVEY_WEIGHT, rows)
    weight = np.round(w.adult_weight[rows] - w_shift, 1)
    step = survey.height_round_cm
    height = (np.round(w.adult_height[rows] / step) * step).astype(np.int64)
    lo, hi = survey.symptom_days_shift
    shift = rng.draw_int_array(lo, hi, Purpose.SURVEY_SYMPTOM_DAYS, rows)
    reported_days = np.maximum(1, sym_days + shift)

    home_names = np.asarray(w.home_names(), dtype=object)
    work_names = np.asarray(w.workplace_names(), dtype=object)
    adult_names = np.asarray(w.adult_names(), dtype=object)

    cols: dict[str, np.ndarray] = {
        "name": adult_names[rows],
        "home": home_names[w.adult_home[rows]],
        "workplace": work_names[w.adult_workplace[rows]],
        "age": np.asarray([str(a) for a in w.adult_age[rows]], dtype=object),
        "sex": np.asarray([_SEX_LABELS[s] for s in w.adult_sex[rows]], dtype=object),
        "height": np.asarray([str(v) for v in height], dtype=object),
        "weight": np.asarray([f"{v:.1f}" for v in weight], dtype=object),
        "vaccination": np.asarray(
            [str(int(v)) for v in w.adult_vaccinated[rows]], dtype=object
        ),
        "symptom_days": np.asarray([str(v) for v in reported_days], dtype=object),
    }
    for f, field in enumerate(OMISSIBLE_FIELDS):
        u = rng.draw_array(Purpose.SURVEY_OMIT, f, rows)
        drop = u < survey.omission_rate
        if drop.any():
            col = cols[field].copy()
            col[drop] = ""
            cols[field] = col
    return pd.DataFrame(cols)


def export_bundle(
    trace: SimulationTrace,
    out_dir: str | Path,
    fmt: str = WIDE,
    tables: list[str] | None = None,
    force: bool = False,
    survey: SurveyNoiseParams | None = None,
    config_digest: str | None = None,
) -> dict:
    """Write the bundle and return the manifest dict."""
    if fmt not in (WIDE, LONG):
        raise ConfigurationError(f"export.format: {fmt!r} must be wide or long")
    wanted = list(LEARNER_TABLES) if tables is None else list(tables)
    unknown = [t for t in wanted if t not in LEARNER_TABLES]
    if unknown:
        raise ConfigurationError(f"export.tables: unknown table {unknown[0]!r}")
    if survey is not None:
        survey.validate()
        if tables is not None and "adult_information" in wanted:
            raise ConfigurationError(
                "export.tables: adult_information is withheld while the "
                "questionnaire is enabled"
            )
        wanted = [t for t in wanted if t != "adult_information"]

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    targets = [out / f"{t}.csv" for t in wanted]
    if survey is not None:
        targets.append(out / f"{QUESTIONNAIRE_TABLE}.csv")
    targets.append(out / "manifest.json")
    if not force:
        for t in targets:
            if t.exists():
                raise DataError(
                    f"refusing to overwrite {t}; pass force to replace it"
                )

    info = _info_frames(trace)
    table_rows: dict[str, int] = {}
    for name in wanted:
        path = out / f"{name}.csv"
        if name in info:
            info[name].to_csv(path, index=False)
            table_rows[f"{name}.csv"] = len(info[name])
        elif name.endswith("_status"):
            grp = name.split("_")[0]
            writer = _write_wide_status if fmt == WIDE else _write_long_status
            table_rows[f"{name}.csv"] = writer(path, trace, grp)
        else:
            grp = name.split("_")[0]
            writer = _write_wide_place if fmt == WIDE else _write_long_place
            table_rows[f"{name}.csv"] = writer(path, trace, grp)

    if survey is not None:
        q = build_questionnaire(trace, survey)
        q.to_csv(out / f"{QUESTIONNAIRE_TABLE}.csv", index=False)
        table_rows[f"{QUESTIONNAIRE_TABLE}.csv"] = len(q)

    w = trace.world
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "seed": trace.seed,
        "scenario": w.scenario.kind.value,
        "hint_level": w.scenario.hint_level,
        "format": fmt,
        "config_sha256": config_digest,
        "counts": {
            "adults": w.n_adults,
            "children": w.n_children,
            "homes": w.n_homes,
            "workplaces": w.n_workplaces,
            "restaurants": w.n_restaurants,
            "hospitals": w.n_hospitals,
            "schools": w.n_schools,
            "days": trace.n_days,
            "hours": trace.n_hours,
        },
        "tables": table_rows,
        "infections_by_place_kind": trace.infections_by_place_kind,
        "questionnaire": survey is not None,
    }
    with (out / "manifest.json").open("w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


# --- reading ------------------------------------------------------------------


def read_manifest(bundle_dir: str | Path) -> dict:
    path = Path(bundle_dir) / "manifest.json"
    if not path.exists():
        raise DataError(f"no manifest.json in {bundle_dir}; not a bundle")
    with path.open("r", encoding="utf-8") as fh:
        return json.load(fh)


def load_table(bundle_dir: str | Path, name: str) -> pd.DataFrame:
    path = Path(bundle_dir) / f"{name}.csv"
    if not path.exists():
        raise DataError(f"table {name} missing from bundle {bundle_dir}")
    return pd.read_csv(path, keep_default_na=False, na_values=[])


def load_status_codes(path: str | Path) -> tuple[list[str], list[str], np.ndarray]:
    """Read a wide status table into (dates, agent names, state codes)."""
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "date":
            raise DataError(f"{path}: not a wide status table")
        names = header[1:]
        dates: list[str] = []
        rows: list[np.ndarray] = []
        for rec in reader:
            dates.append(rec[0])
            try:
                rows.append(
                    np.asarray([STATE_CODES[v] for v in rec[1:]], dtype=np.int8)
                )
            except KeyError as e:
                raise DataError(f"{path}: unknown status {e.args[0]!r}")
    codes = np.vstack(rows) if rows else np.zeros((0, len(names)), dtype=np.int8)
    return dates, names, codes


def place_header(path: str | Path) -> list[str]:
    """Agent names from a wide place table header."""
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        header = next(csv.reader(fh))
    if header[:2] != ["date", "hour"]:
        raise DataError(f"{path}: not a wide place table")
    return header[2:]


def iter_place_rows(path: str | Path, hours: set[int] | None = None):
    """Stream (date, hour, values) from a wide place table.

    With hours given, other rows are skipped before they are parsed,
    which keeps scans for visit counting cheap.
    """
    want = None if hours is None else {str(h) for h in hours}
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        header = fh.readline().rstrip("\n").split(",")
        if header[:2] != ["date", "hour"]:
            raise DataError(f"{path}: not a wide place table")
        for line in fh:
            date, hour, rest = line.rstrip("\n").split(",", 2)
            if want is not None and hour not in want:
                continue
            yield date, int(hour), rest.split(",")


# --- wide <-> long conversions --------------------------------------------------


def status_wide_to_long(frame: pd.DataFrame, group: str) -> pd.DataFrame:
    out = frame.melt(id_vars=["date"], var_name=group, value_name="status")
    return out.sort_values(["date", group], kind="stable").reset_index(drop=True)


def status_long_to_wide(frame: pd.DataFrame, group: str) -> pd.DataFrame:
    wide = frame.pivot(index="date", columns=group, values="status")
    wide = wide.sort_index()
    wide = wide[sorted(wide.columns)]
    return wide.reset_index().rename_axis(None, axis=1)


def place_wide_to_long(frame: pd.DataFrame, group: str) -> pd.DataFrame:
    out = frame.melt(
        id_vars=["date", "hour"], var_name=group, value_name="place"
    )
    out = out[out["place"] != DEAD_TOKEN]
    return out.sort_values(["date", "hour", group], kind="stable").reset_index(
        drop=True
    )


def place_long_to_wide(frame: pd.DataFrame, group: str) -> pd.DataFrame:
    wide = frame.pivot(index=["date", "hour"], columns=group, values="place")
    # absent rows can only mean the agent was dead at that hour
    wide = wide.fillna(DEAD_TOKEN).sort_index()
    wide = wide[sorted(wide.columns)]
    return wide.reset_index().rename_axis(None, axis=1)
