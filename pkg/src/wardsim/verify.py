"""Checks that a run produced what it was supposed to produce.

Two layers. Trace checks look at a SimulationTrace in memory and assert
structural invariants: legal day-over-day state moves, place assignment
consistent with health state, no transmission inside hospitals. Bundle
checks read an exported bundle the way a learner would and test that
the scenario's intended statistical artifact is actually present, using
binomial standard errors and conservative thresholds.

Every check returns a CheckResult rather than raising, so callers can
print one line per check and decide how to aggregate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from wardsim import clock
from wardsim.analysis import (
    Bundle,
    rate_by_age,
    rate_by_age_and_visits,
    rate_by_short_hours,
    rate_by_short_hours_and_online,
    vaccination_rate_by_age,
)
from wardsim.engine import SimulationTrace
from wardsim.epidemic import ALLOWED_DAILY_TRANSITIONS, InfectionState
from wardsim.errors import ConfigurationError
from wardsim.mobility import hour_slots
from wardsim.scenario import ScenarioKind
from wardsim.world import (
    DEAD_PLACE,
    PLACE_KIND_RESTAURANT,
)

MIN_DENOMINATOR = 50


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def __str__(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag} {self.name}: {self.detail}"


def _result(name: str, passed: bool, detail: str) -> CheckResult:
    return CheckResult(name=name, passed=bool(passed), detail=detail)


# --- trace checks ----------------------------------------------------------------


def check_trace(trace: SimulationTrace) -> list[CheckResult]:
    out: list[CheckResult] = []
    world = trace.world
    n_places = world.n_places

    ok_shape = trace.places.shape == (clock.N_HOURS, world.n_agents) and (
        trace.states.shape == (clock.N_DAYS, world.n_agents)
    )
    out.append(
        _result(
            "trace-shape",
            ok_shape,
            f"places {trace.places.shape}, states {trace.states.shape}",
        )
    )

    legal = np.zeros((8, 8), dtype=bool)
    for src, dsts in ALLOWED_DAILY_TRANSITIONS.items():
        for dst in dsts:
            legal[int(src), int(dst)] = True
    moves = legal[trace.states[:-1].ravel(), trace.states[1:].ravel()]
    bad = int((~moves).sum())
    out.append(
        _result(
            "trace-daily-transitions",
            bad == 0,
            f"{bad} illegal day-over-day state moves",
        )
    )

    day0 = trace.states[0]
    seeds = int((day0 == int(InfectionState.EXPOSED)).sum())
    others = int((day0 == int(InfectionState.SUSCEPTIBLE)).sum())
    out.append(
        _result(
            "trace-day0",
            seeds == 1 and seeds + others == world.n_agents,
            f"{seeds} exposed and {others} susceptible on day 0",
        )
    )

    in_range = (trace.places >= DEAD_PLACE) & (trace.places < n_places)
    out.append(
        _result(
            "trace-place-range",
            bool(in_range.all()),
            "all hourly places inside the place id space",
        )
    )

    # a place of -1 must mean dead, and dead must mean -1, hour by hour
    dead_by_day = trace.states == int(InfectionState.DEAD)
    dead_by_hour = np.repeat(dead_by_day, 24, axis=0)
    mismatch = int((dead_by_hour != (trace.places == DEAD_PLACE)).sum())
    out.append(
        _result(
            "trace-dead-places",
            mismatch == 0,
            f"{mismatch} hour cells where deadness and missing place disagree",
        )
    )

    kinds = world.place_kinds()
    # clip so a trace that already failed the range check cannot crash here
    clipped = np.clip(trace.places, 0, n_places - 1)
    kind_by_hour = np.where(trace.places >= 0, kinds[clipped], -1)
    child_cols = slice(world.n_adults, world.n_agents)
    day_kinds = clock.all_day_kinds()
    weekday_hours = np.repeat(
        np.asarray([k is clock.DayKind.WEEKDAY for k in day_kinds]), 24
    )
    child_weekday_rest = int(
        (kind_by_hour[weekday_hours, child_cols] == PLACE_KIND_RESTAURANT).sum()
    )
    out.append(
        _result(
            "trace-children-weekday-restaurants",
            child_weekday_rest == 0,
            f"{child_weekday_rest} weekday child-hours spent in restaurants",
        )
    )

    sum_new = int(trace.new_infections.sum())
    ever = int(trace.ever_infected().sum())
    out.append(
        _result(
            "trace-infection-count",
            sum_new == ever,
            f"{sum_new} daily new infections vs {ever} ever-infected agents",
        )
    )

    hosp_inf = trace.infections_by_place_kind.get("hospital", 0)
    out.append(
        _result(
            "trace-no-hospital-transmission",
            hosp_inf == 0,
            f"{hosp_inf} infections acquired in hospitals",
        )
    )

    beds_total = int(world.hosp_beds.sum())
    over = int((trace.hospital_occupancy > beds_total).sum())
    out.append(
        _result(
            "trace-bed-capacity",
            over == 0,
            f"{over} days with occupancy above {beds_total} beds",
        )
    )

    # places must be constant within each slot of each day
    const_ok = True
    for d in range(clock.N_DAYS):
        slots = hour_slots(day_kinds[d])
        block = trace.places[d * 24 : (d + 1) * 24]
        for s in set(int(x) for x in slots):
            rows = block[np.asarray(slots) == s]
            if not (rows == rows[0]).all():
                const_ok = False
                break
        if not const_ok:
            break
    out.append(
        _result(
            "trace-slot-constancy",
            const_ok,
            "hourly places constant within each slot",
        )
    )
    return out


# --- shared statistics helpers ---------------------------------------------------


def _rows(table, min_den: int = MIN_DENOMINATOR):
    f = table.frame
    return f[f["denominator"] >= min_den].reset_index(drop=True)


def _diff_z(r1: float, se1: float, r2: float, se2: float) -> float:
    se = math.sqrt(se1 * se1 + se2 * se2)
    if se == 0.0:
        return math.inf if r1 != r2 else 0.0
    return (r1 - r2) / se


def _edge_bins(frame, col: str):
    """First and last row by the grouping column's order."""
    f = frame.sort_values(col, kind="stable").reset_index(drop=True)
    return f.iloc[0], f.iloc[-1]


# --- bundle checks ---------------------------------------------------------------


def _check_integrity(bundle: Bundle) -> list[CheckResult]:
    out: list[CheckResult] = []
    missing: list[str] = []
    wrong: list[str] = []
    for fname, rows in bundle.manifest["tables"].items():
        path = Path(bundle.dir) / fname
        if not path.exists():
            missing.append(fname)
            continue
        n = _count_rows(path)
        if n != rows:
            wrong.append(f"{fname} has {n} rows, manifest says {rows}")
    out.append(
        _result(
            "bundle-tables-present",
            not missing,
            "all manifest tables exist" if not missing else f"missing {missing}",
        )
    )
    out.append(
        _result(
            "bundle-row-counts",
            not wrong,
            "row counts match the manifest" if not wrong else "; ".join(wrong),
        )
    )
    hosp = bundle.manifest["infections_by_place_kind"].get("hospital", 0)
    out.append(
        _result(
            "bundle-no-hospital-transmission",
            hosp == 0,
            f"{hosp} infections acquired in hospitals",
        )
    )
    return out


def _count_rows(path: Path) -> int:
    lines = 0
    with path.open("rb") as fh:
        while True:
            buf = fh.read(1 << 20)
            if not buf:
                break
            lines += buf.count(b"\n")
    return max(lines - 1, 0)


def check_mediator(bundle: Bundle) -> list[CheckResult]:
    out: list[CheckResult] = []
    marginal = _rows(rate_by_age(bundle))
    if len(marginal) < 2:
        out.append(
            _result("mediator-age-gradient", False, "not enough populated age bins")
        )
        return out
    young, old = _edge_bins(marginal, "age_bin")
    z = _diff_z(young["rate"], young["se"], old["rate"], old["se"])
    d_marg = young["rate"] - old["rate"]
    out.append(
        _result(
            "mediator-age-gradient",
            z > 2.0,
            f"youngest {young['rate']:.3f} vs oldest {old['rate']:.3f}, z={z:.2f}",
        )
    )

    cond = rate_by_age_and_visits(bundle).frame
    diffs: list[tuple[float, float]] = []
    for _, stratum in cond.groupby("visits_bin", observed=True):
        s = stratum[stratum["denominator"] >= MIN_DENOMINATOR]
        if len(s) < 2:
            continue
        y, o = _edge_bins(s, "age_bin")
        var = y["se"] ** 2 + o["se"] ** 2
        if var > 0:
            diffs.append((y["rate"] - o["rate"], var))
    if not diffs:
        out.append(
            _result(
                "mediator-conditional-flat",
                False,
                "no visit stratum had enough data in both edge age bins",
            )
        )
        return out
    w = np.asarray([1.0 / v for _, v in diffs])
    d = np.asarray([d for d, _ in diffs])
    d_pool = float((w * d).sum() / w.sum())
    shrunk = d_pool < d_marg / 2.0
    out.append(
        _result(
            "mediator-conditional-flat",
            shrunk,
            f"pooled within-stratum gradient {d_pool:.3f} vs marginal "
            f"{d_marg:.3f}",
        )
    )
    return out


def check_confounder(bundle: Bundle) -> list[CheckResult]:
    out: list[CheckResult] = []
    rest_inf = bundle.manifest["infections_by_place_kind"].get("restaurant", 0)
    out.append(
        _result(
            "confounder-restaurants-inert",
            rest_inf == 0,
            f"{rest_inf} infections acquired in restaurants",
        )
    )

    marginal = _rows(rate_by_short_hours(bundle))
    by_status = {int(r["nearest_restaurant_status"]): r for _, r in marginal.iterrows()}
    if 0 not in by_status or 2 not in by_status:
        out.append(
            _result(
                "confounder-short-hours-gradient",
                False,
                "status 0 or status 2 stratum too small",
            )
        )
        return out
    full, closed = by_status[0], by_status[2]
    z = _diff_z(full["rate"], full["se"], closed["rate"], closed["se"])
    d_marg = full["rate"] - closed["rate"]
    out.append(
        _result(
            "confounder-short-hours-gradient",
            z > 2.0,
            f"near full-hours {full['rate']:.3f} vs near closed "
            f"{closed['rate']:.3f}, z={z:.2f}",
        )
    )

    cond = rate_by_short_hours_and_online(bundle).frame
    diffs: list[tuple[float, float]] = []
    for _, stratum in cond.groupby("household_school_status", observed=True):
        s = stratum[stratum["denominator"] >= MIN_DENOMINATOR]
        st = {int(r["nearest_restaurant_status"]): r for _, r in s.iterrows()}
        if 0 in st and 2 in st:
            var = st[0]["se"] ** 2 + st[2]["se"] ** 2
            if var > 0:
                diffs.append((st[0]["rate"] - st[2]["rate"], var))
    if not diffs:
        out.append(
            _result(
                "confounder-conditional-flat",
                False,
                "no school-status stratum had enough data in both "
                "restaurant-status bins",
            )
        )
        return out
    w = np.asarray([1.0 / v for _, v in diffs])
    d = np.asarray([x for x, _ in diffs])
    d_pool = float((w * d).sum() / w.sum())
    out.append(
        _result(
            "confounder-conditional-flat",
            d_pool < d_marg / 2.0,
            f"pooled within-stratum gradient {d_pool:.3f} vs marginal "
            f"{d_marg:.3f}",
        )
    )
    return out


def check_collider(bundle: Bundle) -> list[CheckResult]:
    out: list[CheckResult] = []
    everyone = _rows(vaccination_rate_by_age(bundle))
    overall_num = everyone["numerator"].sum()
    overall_den = everyone["denominator"].sum()
    overall = overall_num / overall_den if overall_den else float("nan")
    worst = 0.0
    for _, row in everyone.iterrows():
        if row["se"] > 0:
            worst = max(worst, abs(row["rate"] - overall) / row["se"])
    out.append(
        _result(
            "collider-marginal-vaccination-flat",
            worst < 3.0,
            f"largest per-bin deviation from {overall:.3f} is {worst:.2f} se",
        )
    )

    infected = _rows(vaccination_rate_by_age(bundle, restrict_to_infected=True))
    if len(infected) < 2:
        out.append(
            _result(
                "collider-infected-vaccination-decreasing",
                False,
                "not enough populated age bins among the infected",
            )
        )
    else:
        young, old = _edge_bins(infected, "age_bin")
        z = _diff_z(young["rate"], young["se"], old["rate"], old["se"])
        out.append(
            _result(
                "collider-infected-vaccination-decreasing",
                z > 2.0,
                f"infected: youngest {young['rate']:.3f} vs oldest "
                f"{old['rate']:.3f}, z={z:.2f}",
            )
        )

    # supporting evidence that the vaccine works at the margin
    info = bundle.adult_information()
    infected_mask = bundle.ever_infected()
    vacc = info.set_index("name").loc[bundle.adult_names()]["vaccination"].to_numpy()
    rv = infected_mask[vacc == 1].mean() if (vacc == 1).any() else float("nan")
    ru = infected_mask[vacc == 0].mean() if (vacc == 0).any() else float("nan")
    nv, nu = int((vacc == 1).sum()), int((vacc == 0).sum())
    sev = math.sqrt(rv * (1 - rv) / nv) if nv else float("inf")
    seu = math.sqrt(ru * (1 - ru) / nu) if nu else float("inf")
    z = _diff_z(ru, seu, rv, sev)
    out.append(
        _result(
            "collider-vaccine-effective",
            z > 2.0,
            f"infection rate unvaccinated {ru:.3f} vs vaccinated {rv:.3f}, "
            f"z={z:.2f}",
        )
    )
    return out


_SCENARIO_CHECKS = {
    ScenarioKind.MEDIATOR.value: check_mediator,
    ScenarioKind.CONFOUNDER.value: check_confounder,
    ScenarioKind.COLLIDER.value: check_collider,
}


def check_bundle(bundle: Bundle | str | Path) -> list[CheckResult]:
    """Integrity checks plus the scenario's own artifact checks."""
    if not isinstance(bundle, Bundle):
        bundle = Bundle(bundle)
    results = _check_integrity(bundle)
    scenario = bundle.manifest["scenario"]
    fn = _SCENARIO_CHECKS.get(scenario)
    if fn is None:
        if scenario != ScenarioKind.CUSTOM.value:
            raise ConfigurationError(
                f"manifest.scenario: unknown scenario {scenario!r}"
            )
        return results
    return results + fn(bundle)
