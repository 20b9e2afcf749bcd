"""Engineered trial features.

Four feature families are derived from the raw sheets: the binary
response (did the clone pass all three statewide trial years), the
control-average yield for each (year, region) cell, each clone's total
yield as a percentage of that control average, and growing-degree-day
sums over three windows of the season.
"""

import csv
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from trialbench.dataset import Dataset, RowKey
from trialbench.errors import (ConsistencyError, DataError, DomainError,
                               MissingControlError, ParseError)
from trialbench.schema import (CONTROL_CLONES, HERMISTON,
                               HERMISTON_CONTROL_CLONES, ColumnSpec)

T_BASE_C = 8.0
GDD_FORMULAS = ("mean", "paper-literal")


def derive_true_keeps(trial_history) -> tuple[dict, set]:
    """Label clones by whether they passed all three statewide trial years.

    trial_history maps clone_id to a list of (year_in_trial, passed)
    records with year_in_trial in {1, 2, 3}. Returns (labels, removed):
    labels[clone] is 1 iff the clone passed three trials and 0 if its
    trialing ended short of that; clones still mid-stream (in year 1 or 2,
    not yet failed) land in the removal set and get no label.
    """
    labels: dict[str, int] = {}
    removed: set[str] = set()
    for clone, records in trial_history.items():
        seen_years = set()
        for year, _ in records:
            if year not in (1, 2, 3):
                raise ConsistencyError(f"clone {clone!r}: year_in_trial {year} "
                                       "outside 1..3")
            if year in seen_years:
                raise ConsistencyError(f"clone {clone!r}: duplicate trial year {year}")
            seen_years.add(year)
        passed_years = {year for year, passed in records if passed}
        if {1, 2, 3} <= passed_years:
            labels[clone] = 1
        elif any(not passed for _, passed in records):
            labels[clone] = 0
        else:
            # passed everything so far but has not finished year 3
            removed.add(clone)
    return labels, removed


def _control_names(region: str) -> tuple[str, ...]:
    if region == HERMISTON:
        return CONTROL_CLONES + HERMISTON_CONTROL_CLONES
    return CONTROL_CLONES


def control_average(ds: Dataset, year: int, region: str) -> float:
    """Mean Total Yield of the control varieties for one (year, region)."""
    yields = ds.column("Total Yield")
    miss = ds.column_missing("Total Yield")
    controls = _control_names(region)
    found = [float(yields[i]) for i, key in enumerate(ds.keys)
             if key.year == year and key.region == region
             and key.clone_id in controls and not miss[i]]
    if not found:
        raise MissingControlError(f"no control yields for ({year}, {region})")
    return float(np.mean(found))


def percent_ca(total_yield: float, ctrl_ave: float) -> float:
    """A clone's total yield as a percentage of the control average."""
    if not ctrl_ave > 0:
        raise DomainError(f"control average must be positive, got {ctrl_ave}")
    return 100.0 * total_yield / ctrl_ave


@dataclass(frozen=True)
class DailyTemperatures:
    """Daily max/min air temperatures from planting through vine kill."""

    dates: tuple[date, ...]
    t_max: np.ndarray
    t_min: np.ndarray
    t_base: float = T_BASE_C

    def __post_init__(self):
        t_max = np.asarray(self.t_max, dtype=np.float64)
        t_min = np.asarray(self.t_min, dtype=np.float64)
        object.__setattr__(self, "t_max", t_max)
        object.__setattr__(self, "t_min", t_min)
        n = len(self.dates)
        if t_max.shape != (n,) or t_min.shape != (n,):
            raise DataError("temperature series lengths differ from date count")
        for prev, nxt in zip(self.dates, self.dates[1:]):
            if not nxt > prev:
                raise DataError(f"dates not strictly increasing at {nxt}")
        low = t_max < t_min
        if low.any():
            day = self.dates[int(np.argmax(low))]
            raise DataError(f"t_max < t_min on {day}")

    @property
    def n_days(self) -> int:
        return len(self.dates)


def daily_gdd(temps: DailyTemperatures, formula: str = "mean") -> np.ndarray:
    """Per-day growing degree days, clamped at zero below base temperature.

    "mean" accumulates max(0, (t_max + t_min)/2 - t_base), the
    conventional definition. "paper-literal" accumulates
    max(0, (t_max - t_min)/2 - t_base), using the temperature spread
    instead of the mean; it is kept selectable for reproduction runs.
    """
    if formula not in GDD_FORMULAS:
        raise DomainError(f"gdd formula must be one of {GDD_FORMULAS}")
    if formula == "mean":
        raw = (temps.t_max + temps.t_min) / 2.0 - temps.t_base
    else:
        raw = (temps.t_max - temps.t_min) / 2.0 - temps.t_base
    return np.maximum(raw, 0.0)


def gdd_windows(temps: DailyTemperatures, formula: str = "mean") -> tuple[float, float, float]:
    """GDD sums over days 1-60, 61-90, and 91 through vine kill.

    Windows beyond the available span contribute empty (zero) sums.
    """
    per_day = daily_gdd(temps, formula)
    return (float(per_day[:60].sum()),
            float(per_day[60:90].sum()),
            float(per_day[90:].sum()))


def load_daily_temperatures(path, t_base: float = T_BASE_C) -> dict:
    """Read a weather CSV into one DailyTemperatures per (year, planting).

    Expected columns: year, planting, date (ISO), t_max, t_min. Rows are
    sorted by date within each group.
    """
    groups: dict[tuple[int, str], list] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.DictReader(fh)):
            line = i + 2
            try:
                key = (int(row["year"]), row["planting"].strip().lower())
                rec = (date.fromisoformat(row["date"].strip()),
                       float(row["t_max"]), float(row["t_min"]))
            except (KeyError, ValueError) as exc:
                raise ParseError(f"{path}: line {line}: {exc}", row=line) from None
            groups.setdefault(key, []).append(rec)
    out = {}
    for key, recs in groups.items():
        recs.sort(key=lambda r: r[0])
        out[key] = DailyTemperatures(dates=tuple(r[0] for r in recs),
                                     t_max=[r[1] for r in recs],
                                     t_min=[r[2] for r in recs],
                                     t_base=t_base)
    return out


def synthetic_temperatures(year: int, planting: str, n_days: int, seed_rng) -> DailyTemperatures:
    """Plausible season of daily temperatures for fixtures and tests."""
    start = date(year, 4 if planting == "late" else 3, 15)
    day = np.arange(n_days)
    mid = 16.0 + 8.0 * np.sin(np.pi * day / max(n_days - 1, 1))
    spread = 5.0 + 2.0 * seed_rng.random(n_days)
    noise = seed_rng.normal(0.0, 1.5, n_days)
    return DailyTemperatures(
        dates=tuple(start + timedelta(days=int(d)) for d in day),
        t_max=mid + noise + spread, t_min=mid + noise - spread)


def add_engineered_features(ds: Dataset, temps_by_group=None,
                            gdd_formula: str = "mean") -> Dataset:
    """Append Ctrl ave, % CA and the three GDD window columns.

    Control averages are computed per (year, region); % CA is missing
    wherever Total Yield is. GDD columns need a temperature series per
    (year, planting) and are skipped when temps_by_group is None.
    """
    n = ds.n_rows
    new_specs = [ColumnSpec("Ctrl ave", "derived", "cwt/acre"),
                 ColumnSpec("% CA", "derived", "percent")]
    ctrl = np.empty(n)
    pct = np.full(n, np.nan)
    pct_missing = np.zeros(n, dtype=bool)
    yields = ds.column("Total Yield")
    ymiss = ds.column_missing("Total Yield")
    cell_cache: dict[tuple[int, str], float] = {}
    for i, key in enumerate(ds.keys):
        cell = (key.year, key.region)
        if cell not in cell_cache:
            cell_cache[cell] = control_average(ds, *cell)
        ctrl[i] = cell_cache[cell]
        if ymiss[i]:
            pct_missing[i] = True
        else:
            pct[i] = percent_ca(float(yields[i]), ctrl[i])
    cols = [ctrl, pct]
    masks = [np.zeros(n, dtype=bool), pct_missing]

    if temps_by_group is not None:
        names = ("GDD 1-60", "GDD 61-90", "GDD 91-end")
        gdd = np.empty((n, 3))
        for i, key in enumerate(ds.keys):
            group = (key.year, key.planting)
            if group not in temps_by_group:
                raise DataError(f"no temperature series for {group}")
            gdd[i] = gdd_windows(temps_by_group[group], gdd_formula)
        for w, name in enumerate(names):
            new_specs.append(ColumnSpec(name, "derived", "gdd"))
            cols.append(gdd[:, w])
            masks.append(np.zeros(n, dtype=bool))

    values = np.column_stack([ds.values] + cols)
    missing = np.column_stack([ds.missing] + masks)
    return Dataset(specs=ds.specs + tuple(new_specs), values=values,
                   missing=missing, keys=ds.keys, labels=ds.labels)
