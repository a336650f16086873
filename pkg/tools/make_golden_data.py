#!/usr/bin/env python3
"""Generate the bundled synthetic panel (data/golden/panel.csv).

28 countries x 2003-2017 x {unem, youth, growth, nomulc}, with planted
cluster-specific coefficients and a common-period error component so the
Period SUR weighting has real structure to estimate. One growth cell is
removed to make the extractive sample unbalanced (195 of 196 rows).

Deterministic: fixed seed, values rounded to 4 decimals in the CSV.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
GOLDEN = ROOT / "data" / "golden"

YEARS = list(range(2003, 2018))
SEED = 20240809

INCLUSIVE = ["AT", "BE", "DE", "DK", "EE", "FI", "FR", "IE", "LU", "MT", "NL", "PT", "SE", "UK"]
EXTRACTIVE = ["BG", "CY", "CZ", "EL", "ES", "HR", "HU", "IT", "LT", "LV", "PL", "RO", "SI", "SK"]

# (intercept, youth(-1), growth, nomulc, dummy)
COEFFS = {
    "inclusive": (3.1, 0.29, -0.22, -0.25, 0.42),
    "extractive": (1.1, 0.38, -0.17, -0.05, 0.82),
}

# first sample year of one extractive country, so the unbalanced sample is
# 195 rows and the 2-lag serial-correlation regression keeps 167 of them
MISSING_CELL = ("HR", 2004, "growth")


def read_calendar() -> dict[str, list[tuple[int, int]]]:
    calendar: dict[str, list[tuple[int, int]]] = {}
    with open(GOLDEN / "events.csv", newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        next(reader)
        for country, start, end in reader:
            stop = YEARS[-1] if end == "ongoing" else int(end)
            calendar.setdefault(country, []).append((int(start), stop))
    return calendar


def dummy_value(calendar, country: str, year: int) -> float:
    return float(any(s <= year <= e for s, e in calendar.get(country, [])))


def main() -> None:
    rng = np.random.default_rng(SEED)
    calendar = read_calendar()
    n_years = len(YEARS)

    cells: dict[tuple[str, int, str], float] = {}
    for label, countries in (("inclusive", INCLUSIVE), ("extractive", EXTRACTIVE)):
        a0, b_youth, b_growth, b_nomulc, b_dummy = COEFFS[label]
        # common period shocks shared by the cluster's countries
        period_shock = rng.normal(0.0, 0.45, size=n_years)
        for country in countries:
            dummies = np.array([dummy_value(calendar, country, y) for y in YEARS])
            base_youth = rng.uniform(10.0, 24.0)
            youth = np.empty(n_years)
            ar = 0.0
            for t in range(n_years):
                ar = 0.6 * ar + rng.normal(0.0, 1.6)
                youth[t] = base_youth + 3.0 * dummies[t] + ar
            growth = 2.5 - 3.5 * dummies + rng.normal(0.0, 1.5, size=n_years)
            nomulc = 2.0 + rng.normal(0.0, 2.0, size=n_years)
            noise = np.empty(n_years)
            ar = 0.0
            for t in range(n_years):
                ar = 0.4 * ar + rng.normal(0.0, 0.5)
                noise[t] = period_shock[t] + ar
            unem = np.empty(n_years)
            for t, year in enumerate(YEARS):
                lagged_youth = youth[t - 1] if t > 0 else base_youth
                unem[t] = (
                    a0
                    + b_youth * lagged_youth
                    + b_growth * growth[t]
                    + b_nomulc * nomulc[t]
                    + b_dummy * dummies[t]
                    + noise[t]
                )
            for t, year in enumerate(YEARS):
                cells[(country, year, "unem")] = unem[t]
                cells[(country, year, "youth")] = youth[t]
                cells[(country, year, "growth")] = growth[t]
                cells[(country, year, "nomulc")] = nomulc[t]

    del cells[MISSING_CELL]

    target = GOLDEN / "panel.csv"
    with open(target, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["country", "year", "unem", "youth", "growth", "nomulc"])
        for country in sorted(INCLUSIVE + EXTRACTIVE):
            for year in YEARS:
                row = [country, year]
                for var in ("unem", "youth", "growth", "nomulc"):
                    value = cells.get((country, year, var))
                    row.append("" if value is None else f"{value:.4f}")
                writer.writerow(row)
    print(f"wrote {target}")


if __name__ == "__main__":
    main()
