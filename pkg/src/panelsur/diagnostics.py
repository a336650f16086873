"""Specification and residual test battery for the estimated panel models.

Each test returns a `TestResult` carrying the statistic, degrees of freedom,
p-value, and a verdict string stating the null hypothesis and the 5% call.
Residual-based tests run on the unweighted residuals of the final model:
weighted residuals would mechanically remove the structure being tested.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import EstimationError, SpecificationError
from .estimators import EstimationResult, _check_rank
from .numerics import chi2_sf, f_sf, normal_cdf, pearson, spd_solve
from .panel import INTERCEPT_NAME, DesignMatrix

__all__ = [
    "TestResult",
    "redundant_fixed_effects",
    "hausman",
    "jarque_bera",
    "breusch_pagan_cd",
    "pesaran_cd",
    "bpg_heteroskedasticity",
    "breusch_godfrey",
    "multicollinearity_screen",
]

ALPHA = 0.05


@dataclass(frozen=True)
class TestResult:
    """One diagnostic outcome: statistic, df, p-value, and 5% verdict."""

    __test__ = False  # not a pytest class despite the name

    name: str
    statistic: float
    df: int | tuple[int, int] | None
    p_value: float
    verdict: str
    n_obs: int | None = None
    details: dict = field(default_factory=dict)

    @property
    def null_retained(self) -> bool:
        return self.p_value >= ALPHA


def _verdict(null_text: str, p_value: float) -> str:
    call = "retained" if p_value >= ALPHA else "rejected"
    return f"H0 ({null_text}) {call} at the 5% level"


def _aux_r_squared(y: np.ndarray, x: np.ndarray, columns: Sequence[str]) -> float:
    """Centered R-squared of an auxiliary OLS regression."""
    _check_rank(x, columns)
    beta = spd_solve(x.T @ x, x.T @ y, name="auxiliary normal equations")
    resid = y - x @ beta
    centered = y - y.mean()
    tss = float(centered @ centered)
    if tss <= 0.0:
        return 0.0
    return 1.0 - float(resid @ resid) / tss


def redundant_fixed_effects(
    pooled: EstimationResult, fe: EstimationResult
) -> TestResult:
    """Likelihood-ratio (and F) test of pooled OLS against entity fixed effects.

    LR = n ln(SSR_pooled / SSR_fe) against chi-square with N - 1 df is the
    headline statistic; the companion F version lives in ``details``.
    """
    if pooled.obs_index != fe.obs_index:
        raise EstimationError("redundancy test needs both fits on the same sample")
    if fe.entity_effects is None:
        raise EstimationError("second argument must be a fixed-effects fit")
    n = pooled.n_obs
    n_entities = len(fe.entity_effects)
    if n_entities < 2:
        raise EstimationError("redundancy test needs at least 2 entities")
    k_slopes = len(fe.names)
    ssr_pooled = pooled.unweighted_stats.ssr
    ssr_fe = fe.unweighted_stats.ssr
    if ssr_fe > ssr_pooled * (1.0 + 1e-12):
        raise EstimationError(
            f"fixed-effects SSR {ssr_fe!r} exceeds pooled SSR {ssr_pooled!r}"
        )
    ssr_fe = min(ssr_fe, ssr_pooled)
    df_within = n - n_entities - k_slopes
    f_stat = ((ssr_pooled - ssr_fe) / (n_entities - 1)) / (ssr_fe / df_within)
    f_p = f_sf(f_stat, n_entities - 1, df_within)
    lr = n * math.log(ssr_pooled / ssr_fe) if ssr_fe > 0.0 else float("inf")
    lr_p = chi2_sf(lr, n_entities - 1) if math.isfinite(lr) else 0.0
    return TestResult(
        name="redundant-fixed-effects",
        statistic=lr,
        df=n_entities - 1,
        p_value=lr_p,
        verdict=_verdict("cross-section fixed effects are redundant", lr_p),
        n_obs=n,
        details={
            "f_statistic": f_stat,
            "f_df": (n_entities - 1, df_within),
            "f_p_value": f_p,
        },
    )


def hausman(fe: EstimationResult, re: EstimationResult) -> TestResult:
    """Hausman specification test of fixed against random effects.

    Quadratic form of the slope-coefficient gap in the covariance difference;
    falls back to a pseudo-inverse (flagged) when the difference is not
    positive definite.
    """
    common = [n for n in fe.names if n in re.names and n != INTERCEPT_NAME]
    if not common:
        raise EstimationError("no common slope coefficients to compare")
    fe_idx = [fe.names.index(n) for n in common]
    re_idx = [re.names.index(n) for n in common]
    gap = fe.coefficients[fe_idx] - re.coefficients[re_idx]
    v_diff = (
        fe.covariance[np.ix_(fe_idx, fe_idx)] - re.covariance[np.ix_(re_idx, re_idx)]
    )
    v_diff = 0.5 * (v_diff + v_diff.T)
    pinv_used = False
    try:
        statistic = float(gap @ spd_solve(v_diff, gap, name="covariance difference"))
    except EstimationError:
        pinv_used = True
        warnings.warn(
            "Hausman covariance difference is not positive definite; "
            "using a pseudo-inverse",
            stacklevel=2,
        )
        statistic = float(gap @ np.linalg.pinv(v_diff) @ gap)
    df = len(common)
    p_value = chi2_sf(max(statistic, 0.0), df)
    details = {"coefficient_gap": {n: float(g) for n, g in zip(common, gap)}}
    if pinv_used:
        details["pseudo_inverse"] = True
    return TestResult(
        name="hausman",
        statistic=statistic,
        df=df,
        p_value=p_value,
        verdict=_verdict("random-effects estimates are consistent", p_value),
        n_obs=fe.n_obs,
        details=details,
    )


def jarque_bera(residuals) -> TestResult:
    """Jarque-Bera normality test from moment-based skewness and kurtosis."""
    e = np.asarray(residuals, dtype=float).ravel()
    n = e.size
    if n < 4:
        raise EstimationError("Jarque-Bera requires at least 4 residuals")
    centered = e - e.mean()
    m2 = float(np.mean(centered**2))
    if m2 <= 0.0:
        raise EstimationError("Jarque-Bera is undefined for zero-variance residuals")
    skewness = float(np.mean(centered**3)) / m2**1.5
    kurtosis = float(np.mean(centered**4)) / m2**2
    statistic = n / 6.0 * (skewness**2 + (kurtosis - 3.0) ** 2 / 4.0)
    p_value = chi2_sf(statistic, 2)
    return TestResult(
        name="jarque-bera",
        statistic=statistic,
        df=2,
        p_value=p_value,
        verdict=_verdict("residuals are normally distributed", p_value),
        n_obs=n,
        details={"skewness": skewness, "kurtosis": kurtosis},
    )


def _residuals_by_entity(
    residuals: np.ndarray, obs_index: Sequence[tuple[str, int]]
) -> dict[str, dict[int, float]]:
    series: dict[str, dict[int, float]] = {}
    for value, (entity, year) in zip(np.asarray(residuals, dtype=float), obs_index):
        series.setdefault(entity, {})[year] = float(value)
    return series


def _pairwise_correlations(
    residuals: np.ndarray, obs_index: Sequence[tuple[str, int]]
) -> tuple[list[tuple[int, float]], int, int]:
    """(overlap, correlation) for usable entity pairs, plus N and excluded count."""
    series = _residuals_by_entity(residuals, obs_index)
    entities = list(series)
    n_entities = len(entities)
    if n_entities < 2:
        raise EstimationError("cross-section dependence tests need at least 2 entities")
    pairs: list[tuple[int, float]] = []
    excluded = 0
    for i in range(n_entities):
        for j in range(i + 1, n_entities):
            common = sorted(set(series[entities[i]]) & set(series[entities[j]]))
            if len(common) < 2:
                excluded += 1
                continue
            e_i = [series[entities[i]][yr] for yr in common]
            e_j = [series[entities[j]][yr] for yr in common]
            pairs.append((len(common), pearson(e_i, e_j)))
    if excluded:
        warnings.warn(
            f"{excluded} entity pair(s) with overlap < 2 excluded; df reduced",
            stacklevel=3,
        )
    if not pairs:
        raise EstimationError("no entity pair has an overlap of at least 2 years")
    return pairs, n_entities, excluded


def breusch_pagan_cd(
    residuals, obs_index: Sequence[tuple[str, int]]
) -> TestResult:
    """Breusch-Pagan LM test of cross-section dependence.

    LM sums T_ij * rho_ij^2 over entity pairs; df is the number of usable
    pairs (N(N-1)/2 when nothing is excluded).
    """
    pairs, n_entities, excluded = _pairwise_correlations(residuals, obs_index)
    statistic = float(sum(t_ij * rho**2 for t_ij, rho in pairs))
    df = len(pairs)
    p_value = chi2_sf(statistic, df)
    return TestResult(
        name="breusch-pagan-cd",
        statistic=statistic,
        df=df,
        p_value=p_value,
        verdict=_verdict("no cross-section dependence", p_value),
        n_obs=len(obs_index),
        details={"n_entities": n_entities, "excluded_pairs": excluded},
    )


def pesaran_cd(residuals, obs_index: Sequence[tuple[str, int]]) -> TestResult:
    """Pesaran CD test of cross-section dependence (standard normal under H0)."""
    pairs, n_entities, excluded = _pairwise_correlations(residuals, obs_index)
    total = sum(math.sqrt(t_ij) * rho for t_ij, rho in pairs)
    statistic = math.sqrt(2.0 / (n_entities * (n_entities - 1))) * total
    p_value = 2.0 * normal_cdf(-abs(statistic))
    return TestResult(
        name="pesaran-cd",
        statistic=statistic,
        df=None,
        p_value=p_value,
        verdict=_verdict("no cross-section dependence", p_value),
        n_obs=len(obs_index),
        details={"n_entities": n_entities, "excluded_pairs": excluded},
    )


def bpg_heteroskedasticity(
    result: EstimationResult, dm: DesignMatrix
) -> TestResult:
    """Breusch-Pagan-Godfrey LM test regressing squared residuals on X."""
    if not dm.has_intercept:
        raise EstimationError("heteroskedasticity test requires an intercept")
    e = np.asarray(result.residuals_unweighted, dtype=float)
    if e.shape[0] != dm.n_obs:
        raise EstimationError("residuals do not match the design matrix")
    r2_aux = _aux_r_squared(e**2, dm.x, dm.columns)
    n = dm.n_obs
    statistic = n * r2_aux
    df = dm.k_params - 1
    if df < 1:
        raise EstimationError("heteroskedasticity test needs at least one regressor")
    p_value = chi2_sf(statistic, df)
    return TestResult(
        name="bpg-heteroskedasticity",
        statistic=statistic,
        df=df,
        p_value=p_value,
        verdict=_verdict("residuals are homoskedastic", p_value),
        n_obs=n,
        details={"aux_r_squared": r2_aux},
    )


def breusch_godfrey(
    result: EstimationResult, dm: DesignMatrix, lags: int
) -> TestResult:
    """Breusch-Godfrey LM test for serial correlation up to ``lags``.

    The auxiliary regression adds per-entity lagged residuals to the original
    regressors; rows whose lagged residuals are unavailable (the first
    ``lags`` observations of each entity, or interior gaps) are dropped.
    """
    if lags < 1:
        raise EstimationError(f"lag order must be >= 1, got {lags}")
    e = np.asarray(result.residuals_unweighted, dtype=float)
    if e.shape[0] != dm.n_obs:
        raise EstimationError("residuals do not match the design matrix")
    by_cell = {obs: float(v) for v, obs in zip(e, dm.obs_index)}
    rows: list[int] = []
    lagged: list[list[float]] = []
    for row, (entity, year) in enumerate(dm.obs_index):
        values = []
        for lag_len in range(1, lags + 1):
            cell = by_cell.get((entity, year - lag_len))
            if cell is None:
                break
            values.append(cell)
        else:
            rows.append(row)
            lagged.append(values)
    n_aux = len(rows)
    if n_aux <= dm.k_params + lags:
        raise EstimationError(
            f"insufficient time depth for {lags} lag(s): {n_aux} usable rows"
        )
    x_aux = np.column_stack([dm.x[rows], np.asarray(lagged)])
    columns = dm.columns + tuple(f"resid(-{i})" for i in range(1, lags + 1))
    r2_aux = _aux_r_squared(e[rows], x_aux, columns)
    statistic = n_aux * r2_aux
    p_value = chi2_sf(statistic, lags)
    return TestResult(
        name="breusch-godfrey",
        statistic=statistic,
        df=lags,
        p_value=p_value,
        verdict=_verdict("no serial correlation", p_value),
        n_obs=n_aux,
        details={"aux_r_squared": r2_aux, "lags": lags},
    )


def multicollinearity_screen(
    dm: DesignMatrix, result: EstimationResult
) -> TestResult:
    """Compare the model R-squared with the largest inter-regressor correlation.

    Multicollinearity is called absent when the fit's R-squared exceeds every
    pairwise correlation among non-intercept regressors. The p-value is a
    0/1 pass indicator, not a distributional probability.
    """
    names = dm.columns[1:] if dm.has_intercept else dm.columns
    x = dm.x[:, 1:] if dm.has_intercept else dm.x
    if len(names) < 2:
        raise SpecificationError("multicollinearity screen needs at least 2 regressors")
    table: dict[str, float] = {}
    max_abs = 0.0
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            rho = pearson(x[:, i], x[:, j])
            table[f"{names[i]}~{names[j]}"] = rho
            max_abs = max(max_abs, abs(rho))
    r_squared = result.weighted_stats.r_squared
    absent = r_squared > max_abs
    p_value = 1.0 if absent else 0.0
    verdict = (
        "multicollinearity absent (model R-squared exceeds every "
        "inter-regressor correlation)"
        if absent
        else "multicollinearity suspected (an inter-regressor correlation "
        "reaches the model R-squared)"
    )
    return TestResult(
        name="multicollinearity-screen",
        statistic=max_abs,
        df=None,
        p_value=p_value,
        verdict=verdict,
        n_obs=dm.n_obs,
        details={"correlations": table, "model_r_squared": r_squared},
    )
