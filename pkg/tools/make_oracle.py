#!/usr/bin/env python3
"""Independent oracle for the golden dataset.

Recomputes the full two-cluster pipeline from the CSVs using a separate
numeric route: numpy lstsq for every regression, scipy.linalg.sqrtm (Schur
method) for the inverse square root, scipy.stats for all tail probabilities,
np.corrcoef for correlations, and explicit LSDV dummies for fixed effects.
Writes tests/golden/oracle_values.json; the acceptance suite compares the
package output against these numbers at 1e-10.

This script intentionally imports nothing from the package.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np
import scipy.linalg
import scipy.stats

ROOT = Path(__file__).resolve().parent.parent
GOLDEN = ROOT / "data" / "golden"
OUT = ROOT / "tests" / "golden" / "oracle_values.json"

YEARS = list(range(2003, 2018))
SAMPLE = list(range(2004, 2018))
VARS = ("unem", "youth", "growth", "nomulc")
DEP = "unem"
HORIZON = 2017
SERIAL_LAGS = 2


def read_panel() -> dict[tuple[str, int, str], float]:
    cells = {}
    with open(GOLDEN / "panel.csv", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        names = header[2:]
        for row in reader:
            country, year = row[0], int(row[1])
            for name, tok in zip(names, row[2:]):
                if tok.strip():
                    cells[(country, year, name)] = float(tok)
    return cells


def read_scores() -> dict[str, float]:
    scores = {}
    with open(GOLDEN / "scores.csv", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        for country, _, score in reader:
            scores[country] = float(score)
    return scores


def read_calendar() -> dict[str, list[tuple[int, int]]]:
    calendar: dict[str, list[tuple[int, int]]] = {}
    with open(GOLDEN / "events.csv", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        for country, start, end in reader:
            stop = HORIZON if end == "ongoing" else int(end)
            calendar.setdefault(country, []).append((int(start), stop))
    return calendar


def crisis(calendar, country, year) -> float:
    return float(any(s <= year <= e for s, e in calendar.get(country, [])))


def median_split(scores: dict[str, float]) -> tuple[float, list[str], list[str]]:
    ordered = sorted(scores.values())
    n = len(ordered)
    median = ordered[n // 2] if n % 2 else 0.5 * (ordered[n // 2 - 1] + ordered[n // 2])
    inclusive = sorted(c for c, s in scores.items() if s > median)
    extractive = sorted(c for c, s in scores.items() if s < median)
    return median, inclusive, extractive


def assemble(cells, calendar, countries):
    """Stack the sample entity-major/year-minor with listwise deletion."""
    y, x, idx, blocks = [], [], [], []
    for country in countries:
        start = len(idx)
        for year in SAMPLE:
            values = [
                cells.get((country, year, "unem")),
                cells.get((country, year - 1, "youth")),
                cells.get((country, year, "growth")),
                cells.get((country, year, "nomulc")),
            ]
            if any(v is None for v in values):
                continue
            y.append(values[0])
            x.append([1.0, values[1], values[2], values[3], crisis(calendar, country, year)])
            idx.append((country, year))
        if len(idx) > start:
            blocks.append((country, start, len(idx)))
    return np.array(y), np.array(x), idx, blocks


def period_omega(resid, idx):
    years = sorted({yr for _, yr in idx})
    entities = []
    for ent, _ in idx:
        if ent not in entities:
            entities.append(ent)
    pos_y = {yr: j for j, yr in enumerate(years)}
    pos_e = {e: i for i, e in enumerate(entities)}
    grid = np.zeros((len(entities), len(years)))
    mask = np.zeros_like(grid, dtype=bool)
    for value, (ent, yr) in zip(resid, idx):
        grid[pos_e[ent], pos_y[yr]] = value
        mask[pos_e[ent], pos_y[yr]] = True
    t = len(years)
    omega = np.zeros((t, t))
    for s in range(t):
        for u in range(t):
            both = mask[:, s] & mask[:, u]
            count = int(both.sum())
            if count == 0:
                raise RuntimeError("fragmented sample")
            omega[s, u] = float(np.sum(grid[both, s] * grid[both, u])) / count
    return 0.5 * (omega + omega.T), years


def fit_stats(dep, resid, k, df):
    n = dep.size
    ssr = float(resid @ resid)
    mean_dep = float(dep.mean())
    tss = float(((dep - mean_dep) ** 2).sum())
    r2 = 1.0 - ssr / tss
    adj = 1.0 - (1.0 - r2) * (n - 1) / df
    f_stat = (r2 / (k - 1)) / ((1.0 - r2) / df)
    return {
        "r_squared": r2,
        "adj_r_squared": adj,
        "se_regression": math.sqrt(ssr / df),
        "ssr": ssr,
        "f_statistic": f_stat,
        "prob_f": float(scipy.stats.f.sf(f_stat, k - 1, df)),
        "durbin_watson": float((np.diff(resid) ** 2).sum()) / ssr,
        "mean_dep": mean_dep,
        "sd_dep": float(np.std(dep, ddof=1)),
    }


def lstsq(x, y):
    return np.linalg.lstsq(x, y, rcond=None)[0]


def aux_r2(y, x):
    b = lstsq(x, y)
    resid = y - x @ b
    tss = float(((y - y.mean()) ** 2).sum())
    return 1.0 - float(resid @ resid) / tss


def diagnostics(y, x, idx, blocks, final_resid, weighted_r2):
    n, k = x.shape
    n_entities = len(blocks)
    k_slopes = k - 1
    tests = []

    # pooled vs LSDV fixed effects
    b_pool = lstsq(x, y)
    resid_pool = y - x @ b_pool
    ssr_pool = float(resid_pool @ resid_pool)
    dummies = np.zeros((n, n_entities))
    for col, (_, start, stop) in enumerate(blocks):
        dummies[start:stop, col] = 1.0
    x_lsdv = np.column_stack([dummies, x[:, 1:]])
    b_lsdv = lstsq(x_lsdv, y)
    resid_fe = y - x_lsdv @ b_lsdv
    ssr_fe = float(resid_fe @ resid_fe)
    df_within = n - n_entities - k_slopes
    lr = n * math.log(ssr_pool / ssr_fe)
    tests.append(
        {
            "name": "redundant-fixed-effects",
            "statistic": lr,
            "df": n_entities - 1,
            "p_value": float(scipy.stats.chi2.sf(lr, n_entities - 1)),
        }
    )

    # Hausman: LSDV slope block vs Swamy-Arora RE
    sigma2_e = ssr_fe / df_within
    cov_lsdv = sigma2_e * np.linalg.inv(x_lsdv.T @ x_lsdv)
    v_fe = cov_lsdv[n_entities:, n_entities:]
    b_fe = b_lsdv[n_entities:]

    sizes = np.array([stop - start for _, start, stop in blocks], dtype=float)
    by = np.array([y[start:stop].mean() for _, start, stop in blocks])
    bx = np.vstack([x[start:stop].mean(axis=0) for _, start, stop in blocks])
    bb = lstsq(bx, by)
    ssr_between = float(((by - bx @ bb) ** 2).sum())
    sigma2_u = max(0.0, ssr_between / (n_entities - k) - sigma2_e * float(np.mean(1.0 / sizes)))
    y_star = np.empty_like(y)
    x_star = np.empty_like(x)
    for _, start, stop in blocks:
        t_i = stop - start
        theta = 1.0 - math.sqrt(sigma2_e / (t_i * sigma2_u + sigma2_e))
        y_star[start:stop] = y[start:stop] - theta * y[start:stop].mean()
        x_star[start:stop] = x[start:stop] - theta * x[start:stop].mean(axis=0)
    b_re = lstsq(x_star, y_star)
    resid_re_star = y_star - x_star @ b_re
    sigma2_re = float(resid_re_star @ resid_re_star) / (n - k)
    cov_re = sigma2_re * np.linalg.inv(x_star.T @ x_star)
    gap = b_fe - b_re[1:]
    v_diff = v_fe - cov_re[1:, 1:]
    v_diff = 0.5 * (v_diff + v_diff.T)
    try:
        np.linalg.cholesky(v_diff)
        h_stat = float(gap @ np.linalg.solve(v_diff, gap))
    except np.linalg.LinAlgError:
        h_stat = float(gap @ np.linalg.pinv(v_diff) @ gap)
    tests.append(
        {
            "name": "hausman",
            "statistic": h_stat,
            "df": k_slopes,
            "p_value": float(scipy.stats.chi2.sf(max(h_stat, 0.0), k_slopes)),
        }
    )

    # Jarque-Bera on the final model's unweighted residuals
    centered = final_resid - final_resid.mean()
    m2 = float(np.mean(centered**2))
    skew = float(np.mean(centered**3)) / m2**1.5
    kurt = float(np.mean(centered**4)) / m2**2
    jb = n / 6.0 * (skew**2 + (kurt - 3.0) ** 2 / 4.0)
    tests.append(
        {
            "name": "jarque-bera",
            "statistic": jb,
            "df": 2,
            "p_value": float(scipy.stats.chi2.sf(jb, 2)),
        }
    )

    # cross-section dependence
    series = {}
    for value, (ent, yr) in zip(final_resid, idx):
        series.setdefault(ent, {})[yr] = value
    entities = list(series)
    lm = 0.0
    cd_sum = 0.0
    pairs = 0
    for i in range(len(entities)):
        for j in range(i + 1, len(entities)):
            common = sorted(set(series[entities[i]]) & set(series[entities[j]]))
            if len(common) < 2:
                continue
            e_i = np.array([series[entities[i]][yr] for yr in common])
            e_j = np.array([series[entities[j]][yr] for yr in common])
            rho = float(np.corrcoef(e_i, e_j)[0, 1])
            lm += len(common) * rho**2
            cd_sum += math.sqrt(len(common)) * rho
            pairs += 1
    cd = math.sqrt(2.0 / (len(entities) * (len(entities) - 1))) * cd_sum
    tests.append(
        {
            "name": "breusch-pagan-cd",
            "statistic": lm,
            "df": pairs,
            "p_value": float(scipy.stats.chi2.sf(lm, pairs)),
        }
    )
    tests.append(
        {
            "name": "pesaran-cd",
            "statistic": cd,
            "df": None,
            "p_value": float(2.0 * scipy.stats.norm.cdf(-abs(cd))),
        }
    )

    # heteroskedasticity (squared residuals on X)
    r2_bpg = aux_r2(final_resid**2, x)
    lm_bpg = n * r2_bpg
    tests.append(
        {
            "name": "bpg-heteroskedasticity",
            "statistic": lm_bpg,
            "df": k_slopes,
            "p_value": float(scipy.stats.chi2.sf(lm_bpg, k_slopes)),
        }
    )

    # serial correlation with per-entity lagged residuals, lag rows dropped
    by_cell = {obs: val for val, obs in zip(final_resid, idx)}
    rows = []
    lagged = []
    for row, (ent, yr) in enumerate(idx):
        vals = [by_cell.get((ent, yr - l)) for l in range(1, SERIAL_LAGS + 1)]
        if any(v is None for v in vals):
            continue
        rows.append(row)
        lagged.append(vals)
    x_aux = np.column_stack([x[rows], np.array(lagged)])
    r2_bg = aux_r2(final_resid[rows], x_aux)
    lm_bg = len(rows) * r2_bg
    tests.append(
        {
            "name": "breusch-godfrey",
            "statistic": lm_bg,
            "df": SERIAL_LAGS,
            "p_value": float(scipy.stats.chi2.sf(lm_bg, SERIAL_LAGS)),
        }
    )

    # multicollinearity screen
    max_abs = 0.0
    for i in range(1, k):
        for j in range(i + 1, k):
            rho = abs(float(np.corrcoef(x[:, i], x[:, j])[0, 1]))
            max_abs = max(max_abs, rho)
    tests.append(
        {
            "name": "multicollinearity-screen",
            "statistic": max_abs,
            "df": None,
            "p_value": 1.0 if weighted_r2 > max_abs else 0.0,
        }
    )
    return tests


def run_cluster(label, countries, cells, calendar):
    y, x, idx, blocks = assemble(cells, calendar, countries)
    n, k = x.shape
    years = sorted({yr for _, yr in idx})
    balanced = all(
        sorted(yr for e2, yr in idx if e2 == ent) == years for ent, _, _ in blocks
    )

    b0 = lstsq(x, y)
    omega, omega_years = period_omega(y - x @ b0, idx)
    root = np.linalg.inv(scipy.linalg.sqrtm(omega).real)
    root = 0.5 * (root + root.T)
    pos = {yr: j for j, yr in enumerate(omega_years)}
    y_star = np.empty_like(y)
    x_star = np.empty_like(x)
    for _, start, stop in blocks:
        sub = root[np.ix_([pos[yr] for _, yr in idx[start:stop]],
                          [pos[yr] for _, yr in idx[start:stop]])]
        y_star[start:stop] = sub @ y[start:stop]
        x_star[start:stop] = sub @ x[start:stop]
    beta = lstsq(x_star, y_star)
    resid_star = y_star - x_star @ beta
    resid = y - x @ beta
    df = n - k

    omega_tilde, tilde_years = period_omega(resid_star, idx)
    pos_t = {yr: j for j, yr in enumerate(tilde_years)}
    middle = np.zeros((k, k))
    for _, start, stop in blocks:
        sel = [pos_t[yr] for _, yr in idx[start:stop]]
        block = omega_tilde[np.ix_(sel, sel)]
        middle += x_star[start:stop].T @ block @ x_star[start:stop]
    bread = np.linalg.inv(x_star.T @ x_star)
    cov = bread @ middle @ bread * (n / (n - k))
    se = np.sqrt(np.diag(cov))
    t_stats = beta / se
    p_values = 2.0 * scipy.stats.t.sf(np.abs(t_stats), df)

    weighted = fit_stats(y_star, resid_star, k, df)
    unweighted = fit_stats(y, resid, k, df)
    tests = diagnostics(y, x, idx, blocks, resid, weighted["r_squared"])

    correlations = []
    for var in ("youth", "growth", "nomulc", "dummy"):
        xs, ys = [], []
        for country in countries:
            for year in YEARS:
                u = cells.get((country, year, "unem"))
                v = (
                    crisis(calendar, country, year)
                    if var == "dummy"
                    else cells.get((country, year, var))
                )
                if u is None or v is None:
                    continue
                xs.append(u)
                ys.append(v)
        correlations.append(
            {
                "dependent": "unem",
                "variable": var,
                "value": float(np.corrcoef(xs, ys)[0, 1]),
            }
        )

    names = ["C", "youth(-1)", "growth", "nomulc", "dummy"]
    return {
        "cluster": label,
        "dependent": "unem",
        "sample": [years[0], years[-1]],
        "periods_included": len(years),
        "cross_sections": len(blocks),
        "observations": n,
        "balanced": balanced,
        "result": {
            "coefficients": [
                {
                    "name": names[i],
                    "coefficient": float(beta[i]),
                    "std_error": float(se[i]),
                    "t_statistic": float(t_stats[i]),
                    "p_value": float(p_values[i]),
                }
                for i in range(k)
            ],
            "weighted_statistics": weighted,
            "unweighted_statistics": unweighted,
        },
        "diagnostics": tests,
        "correlations": correlations,
    }


def main() -> None:
    cells = read_panel()
    scores = read_scores()
    calendar = read_calendar()
    median, inclusive, extractive = median_split(scores)
    payload = {
        "median": median,
        "inclusive": inclusive,
        "extractive": extractive,
        "models": [
            run_cluster("inclusive", inclusive, cells, calendar),
            run_cluster("extractive", extractive, cells, calendar),
        ],
    }
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
