"""Stratified rate analyses over an exported bundle.

Everything here reads the CSV files a learner would read; nothing
touches the simulation trace. "Infected" always means the agent's
status table shows any value other than susceptible at any date.

The named analyses mirror the teaching storyline: an age gradient that
dissolves once restaurant visits are conditioned on, a short-business-
hours association that dissolves once school closures are conditioned
on, and a vaccination-by-age table that flips depending on whether it
is computed over everyone or over the infected only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from wardsim.dataset import (
    LONG,
    WIDE,
    iter_place_rows,
    load_status_codes,
    load_table,
    read_manifest,
)
from wardsim.errors import ConfigurationError, DataError
from wardsim.world import nearest_k_matrix

# hours that represent the two slots in which restaurants can be open
LUNCH_HOUR = 12
EVENING_HOUR = 17

VISIT_BIN_LABELS = ("0", "(0,1]", "(1,3]", ">3")


def visit_bin(per_week: float) -> str:
    if per_week == 0:
        return VISIT_BIN_LABELS[0]
    if per_week <= 1:
        return VISIT_BIN_LABELS[1]
    if per_week <= 3:
        return VISIT_BIN_LABELS[2]
    return VISIT_BIN_LABELS[3]


def age_bin(age: int) -> str:
    lo = (int(age) // 10) * 10
    return f"{lo}-{lo + 9}"


@dataclass
class RateTable:
    """Counts and a binomial rate per stratum."""

    frame: pd.DataFrame
    group_cols: tuple[str, ...]

    def write_csv(self, path: str | Path) -> None:
        self.frame.to_csv(path, index=False)

    def write_json(self, path: str | Path) -> None:
        rows = json.loads(self.frame.to_json(orient="records"))
        payload = {"group_cols": list(self.group_cols), "rows": rows}
        with Path(path).open("w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")

    def __str__(self) -> str:
        return self.frame.to_string(index=False)


def stratified_rate(
    covariates: pd.DataFrame, success: np.ndarray, by: list[str]
) -> RateTable:
    """Rate of success per group, with a binomial standard error."""
    for col in by:
        if col not in covariates.columns:
            raise ConfigurationError(f"analysis.by: unknown column {col!r}")
    df = covariates.loc[:, list(by)].copy()
    df["_y"] = np.asarray(success, dtype=np.float64)
    grouped = df.groupby(list(by), observed=True, dropna=False)["_y"]
    agg = grouped.agg(numerator="sum", denominator="count").reset_index()
    num = agg["numerator"].to_numpy(dtype=np.float64)
    den = agg["denominator"].to_numpy(dtype=np.float64)
    with np.errstate(invalid="ignore", divide="ignore"):
        rate = np.where(den > 0, num / den, np.nan)
        se = np.sqrt(rate * (1.0 - rate) / den)
    agg["numerator"] = num.astype(np.int64)
    agg["denominator"] = den.astype(np.int64)
    agg["rate"] = rate
    agg["se"] = se
    return RateTable(frame=agg, group_cols=tuple(by))


class Bundle:
    """Lazy reader over one exported bundle directory."""

    def __init__(self, bundle_dir: str | Path):
        self.dir = Path(bundle_dir)
        self.manifest = read_manifest(self.dir)
        self._cache: dict[str, object] = {}

    @property
    def fmt(self) -> str:
        return self.manifest["format"]

    def table(self, name: str) -> pd.DataFrame:
        key = f"table:{name}"
        if key not in self._cache:
            self._cache[key] = load_table(self.dir, name)
        return self._cache[key]

    def adult_information(self) -> pd.DataFrame:
        path = self.dir / "adult_information.csv"
        if not path.exists():
            raise DataError(
                "adult_information is not in this bundle (withheld while the "
                "questionnaire is enabled); this analysis needs it"
            )
        return self.table("adult_information")

    # --- status ---------------------------------------------------------------

    def _status(self, group: str) -> tuple[list[str], list[str], np.ndarray]:
        key = f"status:{group}"
        if key in self._cache:
            return self._cache[key]
        path = self.dir / f"{group}_status.csv"
        if self.fmt == WIDE:
            dates, names, codes = load_status_codes(path)
        else:
            from wardsim.epidemic import STATE_CODES

            df = pd.read_csv(path)
            wide = df.pivot(index="date", columns=group, values="status")
            wide = wide.sort_index()
            wide = wide[sorted(wide.columns)]
            dates = list(wide.index)
            names = list(wide.columns)
            codes = np.vectorize(STATE_CODES.__getitem__, otypes=[np.int8])(
                wide.to_numpy()
            ) if len(wide) else np.zeros((0, 0), dtype=np.int8)
        self._cache[key] = (dates, names, codes)
        return dates, names, codes

    def adult_names(self) -> list[str]:
        return self._status("adult")[1]

    def dates(self) -> list[str]:
        return self._status("adult")[0]

    def ever_infected(self) -> np.ndarray:
        """Per adult, aligned with adult_names()."""
        codes = self._status("adult")[2]
        return (codes != 0).any(axis=0)

    def first_non_susceptible_day(self) -> np.ndarray:
        """Day index of first non-susceptible status; n_days if never."""
        codes = self._status("adult")[2]
        n_days = codes.shape[0]
        hit = codes != 0
        has = hit.any(axis=0)
        first = np.argmax(hit, axis=0)
        return np.where(has, first, n_days).astype(np.int64)

    # --- restaurant visits ------------------------------------------------------

    def visits_per_week(self) -> np.ndarray:
        """Visits per observed week per adult, aligned with adult_names().

        A visit is one appearance at a restaurant in the lunch or the
        evening slot. Only days up to and including the adult's first
        non-susceptible day count as observed, so post-illness behavior
        does not dilute the measure; never-infected adults are observed
        for the whole run.
        """
        if "visits" in self._cache:
            return self._cache["visits"]
        dates, names, _ = self._status("adult")
        date_index = {d: i for i, d in enumerate(dates)}
        n_days = len(dates)
        first = self.first_non_susceptible_day()
        window_days = np.minimum(first + 1, n_days)
        rest_names = set(self.table("restaurant_information")["name"])
        counts = np.zeros(len(names), dtype=np.int64)

        path = self.dir / "adult_place.csv"
        if self.fmt == WIDE:
            from wardsim.dataset import place_header

            header = place_header(path)
            if header != names:
                order = np.asarray([header.index(n) for n in names])
            else:
                order = None
            for date, _hour, values in iter_place_rows(
                path, hours={LUNCH_HOUR, EVENING_HOUR}
            ):
                day = date_index[date]
                at_rest = np.fromiter(
                    (v in rest_names for v in values), dtype=bool, count=len(values)
                )
                if order is not None:
                    at_rest = at_rest[order]
                counts += at_rest & (day <= first)
        else:
            name_index = {n: i for i, n in enumerate(names)}
            for chunk in pd.read_csv(path, chunksize=1_000_000):
                c = chunk[chunk["hour"].isin([LUNCH_HOUR, EVENING_HOUR])]
                c = c[c["place"].isin(rest_names)]
                if not len(c):
                    continue
                aidx = c["adult"].map(name_index).to_numpy(dtype=np.int64)
                didx = c["date"].map(date_index).to_numpy(dtype=np.int64)
                keep = didx <= first[aidx]
                np.add.at(counts, aidx[keep], 1)
        weeks = window_days / 7.0
        rate = counts / weeks
        self._cache["visits"] = rate
        return rate

    # --- geography ----------------------------------------------------------------

    def nearest_restaurant_status(self, anchor: str = "home") -> pd.Series:
        """Business-hours status of the restaurant nearest each home or
        workplace, as a Series indexed by the place name."""
        if anchor not in ("home", "workplace"):
            raise ConfigurationError(
                f"analysis.anchor: {anchor!r} must be home or workplace"
            )
        info = self.table(f"{anchor}_information")
        rest = self.table("restaurant_information")
        idx = nearest_k_matrix(
            info["latitude"].to_numpy(),
            info["longitude"].to_numpy(),
            rest["latitude"].to_numpy(),
            rest["longitude"].to_numpy(),
            1,
        )[:, 0]
        status = rest["status"].to_numpy()[idx]
        return pd.Series(status, index=list(info["name"]), name="nearest_status")


def _adult_frame(bundle: Bundle) -> pd.DataFrame:
    """Adult covariates joined with infection outcome, in status order."""
    info = bundle.adult_information().set_index("name")
    names = bundle.adult_names()
    missing = [n for n in names if n not in info.index]
    if missing:
        raise DataError(
            f"adult_information is missing {missing[0]!r} named in adult_status"
        )
    frame = info.loc[names].reset_index()
    frame["infected"] = bundle.ever_infected()
    frame["age_bin"] = pd.Categorical(
        [age_bin(a) for a in frame["age"]],
        categories=sorted({age_bin(a) for a in frame["age"]}),
        ordered=True,
    )
    return frame


def rate_by_age(bundle: Bundle) -> RateTable:
    frame = _adult_frame(bundle)
    return stratified_rate(frame, frame["infected"].to_numpy(), ["age_bin"])


def rate_by_age_and_visits(bundle: Bundle) -> RateTable:
    frame = _adult_frame(bundle)
    visits = bundle.visits_per_week()
    frame["visits_bin"] = pd.Categorical(
        [visit_bin(v) for v in visits],
        categories=list(VISIT_BIN_LABELS),
        ordered=True,
    )
    return stratified_rate(
        frame, frame["infected"].to_numpy(), ["visits_bin", "age_bin"]
    )


def rate_by_short_hours(bundle: Bundle, anchor: str = "home") -> RateTable:
    frame = _adult_frame(bundle)
    status = bundle.nearest_restaurant_status(anchor)
    frame["nearest_restaurant_status"] = (
        frame[anchor].map(status).astype(np.int64)
    )
    return stratified_rate(
        frame, frame["infected"].to_numpy(), ["nearest_restaurant_status"]
    )


def _household_school_status(bundle: Bundle) -> pd.Series:
    """Per home: modal school status of cohabiting children, ties high.

    Homes without children are absent from the result.
    """
    kids = bundle.table("child_information")
    schools = bundle.table("school_information").set_index("name")["status"]
    if not len(kids):
        return pd.Series(dtype=np.int64)
    st = kids["school"].map(schools)
    df = pd.DataFrame({"home": kids["home"], "status": st})
    counts = df.groupby(["home", "status"]).size().reset_index(name="n")
    # order by count then status so the last row per home is modal, ties high
    counts = counts.sort_values(["home", "n", "status"], kind="stable")
    top = counts.groupby("home").tail(1)
    return top.set_index("home")["status"].astype(np.int64)


def rate_by_short_hours_and_online(bundle: Bundle) -> RateTable:
    frame = _adult_frame(bundle)
    status = bundle.nearest_restaurant_status("home")
    frame["nearest_restaurant_status"] = (
        frame["home"].map(status).astype(np.int64)
    )
    school = _household_school_status(bundle)
    frame["household_school_status"] = frame["home"].map(school)
    frame = frame[frame["household_school_status"].notna()].copy()
    frame["household_school_status"] = frame["household_school_status"].astype(
        np.int64
    )
    return stratified_rate(
        frame,
        frame["infected"].to_numpy(),
        ["household_school_status", "nearest_restaurant_status"],
    )


def vaccination_rate_by_age(
    bundle: Bundle, restrict_to_infected: bool = False
) -> RateTable:
    frame = _adult_frame(bundle)
    if restrict_to_infected:
        frame = frame[frame["infected"]].copy()
    return stratified_rate(
        frame, frame["vaccination"].to_numpy(dtype=np.float64), ["age_bin"]
    )


ANALYSES = {
    "rate_by_age": rate_by_age,
    "rate_by_age_and_visits": rate_by_age_and_visits,
    "rate_by_short_hours": rate_by_short_hours,
    "rate_by_short_hours_and_online": rate_by_short_hours_and_online,
    "vaccination_rate_by_age": vaccination_rate_by_age,
    "vaccination_rate_by_age_infected": lambda b: vaccination_rate_by_age(
        b, restrict_to_infected=True
    ),
}

# stable shorthand ids for the teaching handout ordering
ALIASES = {
    "fig5": "rate_by_age",
    "fig6": "rate_by_age_and_visits",
    "fig7": "rate_by_short_hours",
    "fig8": "rate_by_short_hours_and_online",
    "fig9": "vaccination_rate_by_age",
    "fig10": "vaccination_rate_by_age_infected",
}


def resolve_analysis(name: str) -> str:
    if name in ALIASES:
        return ALIASES[name]
    if name in ANALYSES:
        return name
    known = ", ".join(sorted(ANALYSES) + sorted(ALIASES))
    raise ConfigurationError(f"analysis.name: {name!r} not one of {known}")


def run_analysis(bundle: Bundle, name: str) -> RateTable:
    return ANALYSES[resolve_analysis(name)](bundle)
