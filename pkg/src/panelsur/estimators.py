"""Pooled OLS, fixed/random effects, and two-stage Period-SUR EGLS with PCSE.

The EGLS chain follows the one-step (non-iterated) recipe: OLS residuals feed
a T x T across-period covariance estimated with pairwise entity counts, each
entity block is rotated by the rows/columns of the covariance's inverse
square root matching its observed years, and OLS on the stacked transformed
data yields the final coefficients. Summary statistics are reported both on
the transformed scale ("weighted") and on the original scale ("unweighted").

All estimation calls are pure and reentrant; results are immutable.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EstimationError
from .numerics import (
    f_sf,
    inverse_sqrt,
    spd_inverse,
    spd_solve,
    symmetrize,
    t_sf,
)
from .panel import DesignMatrix

__all__ = [
    "FitStats",
    "EstimationResult",
    "PeriodCovariance",
    "ols",
    "fixed_effects",
    "random_effects",
    "estimate_period_omega",
    "egls_period_sur",
    "pcse_covariance",
    "durbin_watson",
    "estimate",
]

# Single home of the "(d.f. corrected)" factor used by the PCSE sandwich.
def _df_correction(n: int, k: int) -> float:
    return n / (n - k)


_RANK_RTOL = 1e-10  # relative smallest-singular-value threshold


@dataclass(frozen=True)
class FitStats:
    """Summary statistics of one regression fit."""

    r_squared: float
    adj_r_squared: float
    se_regression: float
    ssr: float
    f_statistic: float
    prob_f: float
    durbin_watson: float
    mean_dep: float
    sd_dep: float


@dataclass(frozen=True)
class PeriodCovariance:
    """Across-period residual covariance with its pairwise observation counts."""

    omega: np.ndarray  # (T_model, T_model)
    period_labels: tuple[int, ...]
    pair_counts: np.ndarray

    @property
    def order(self) -> int:
        return int(self.omega.shape[0])


@dataclass(frozen=True)
class EstimationResult:
    """Coefficients, covariance, inference, residuals, and fit statistics."""

    method: str
    names: tuple[str, ...]
    coefficients: np.ndarray
    covariance: np.ndarray
    std_errors: np.ndarray
    t_stats: np.ndarray
    p_values: np.ndarray
    n_obs: int
    k_params: int
    df_resid: int
    obs_index: tuple[tuple[str, int], ...]
    residuals_unweighted: np.ndarray
    residuals_weighted: np.ndarray
    weighted_stats: FitStats
    unweighted_stats: FitStats
    covariance_method: str = "ordinary"
    log_likelihood: float | None = None
    entity_effects: dict[str, float] | None = None
    variance_components: tuple[float, float] | None = None  # (sigma2_e, sigma2_u)
    theta: dict[str, float] | None = None
    omega: PeriodCovariance | None = None
    notes: tuple[str, ...] = ()

    def coefficient(self, name: str) -> float:
        try:
            return float(self.coefficients[self.names.index(name)])
        except ValueError:
            raise EstimationError(f"no coefficient named {name!r}") from None

    def with_covariance(self, covariance: np.ndarray, method: str) -> "EstimationResult":
        """Same fit with a replacement coefficient covariance (inference redone)."""
        cov = symmetrize(covariance, name="coefficient covariance")
        se, t, p = _inference(self.coefficients, cov, self.df_resid)
        return dataclasses.replace(
            self,
            covariance=cov,
            std_errors=se,
            t_stats=t,
            p_values=p,
            covariance_method=method,
        )


def _check_rank(x: np.ndarray, columns: Sequence[str]) -> None:
    singular = np.linalg.svd(x, compute_uv=False)
    if singular[0] <= 0.0 or singular[-1] <= _RANK_RTOL * singular[0]:
        _, _, vt = np.linalg.svd(x)
        offender = int(np.argmax(np.abs(vt[-1])))
        raise EstimationError(
            f"regressor matrix is rank deficient; column {columns[offender]!r} "
            "is collinear with the others"
        )


def _inference(
    coefficients: np.ndarray, covariance: np.ndarray, df_resid: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    diag = np.diag(covariance)
    if np.any(diag <= 0.0):
        raise EstimationError("coefficient covariance has a non-positive diagonal")
    std_errors = np.sqrt(diag)
    t_stats = coefficients / std_errors
    p_values = np.array([2.0 * t_sf(abs(t), df_resid) for t in t_stats])
    return std_errors, t_stats, p_values


def _durbin_watson_or_nan(residuals: np.ndarray) -> float:
    ssr = float(residuals @ residuals)
    if ssr <= 0.0 or residuals.size < 2:
        return float("nan")
    diffs = np.diff(residuals)
    return float(diffs @ diffs) / ssr


def _fit_stats(
    dep: np.ndarray,
    residuals: np.ndarray,
    *,
    k_params: int,
    df_resid: int,
    f_df1: int | None = None,
) -> FitStats:
    n = dep.size
    ssr = float(residuals @ residuals)
    mean_dep = float(dep.mean())
    centered = dep - mean_dep
    tss = float(centered @ centered)
    sd_dep = math.sqrt(tss / (n - 1)) if n > 1 else float("nan")
    r2 = 1.0 - ssr / tss if tss > 0.0 else float("nan")
    adj = 1.0 - (1.0 - r2) * (n - 1) / df_resid if df_resid > 0 else float("nan")
    se_reg = math.sqrt(ssr / df_resid) if df_resid > 0 else float("nan")
    df1 = (k_params - 1) if f_df1 is None else f_df1
    if df1 >= 1 and df_resid >= 1 and not math.isnan(r2) and r2 < 1.0:
        f_stat = (r2 / df1) / ((1.0 - r2) / df_resid)
        prob_f = f_sf(f_stat, df1, df_resid)
    else:
        f_stat = float("nan")
        prob_f = float("nan")
    return FitStats(
        r_squared=r2,
        adj_r_squared=adj,
        se_regression=se_reg,
        ssr=ssr,
        f_statistic=f_stat,
        prob_f=prob_f,
        durbin_watson=_durbin_watson_or_nan(residuals),
        mean_dep=mean_dep,
        sd_dep=sd_dep,
    )


def _log_likelihood(n: int, ssr: float) -> float:
    if ssr <= 0.0:
        return float("inf")
    return -0.5 * n * (1.0 + math.log(2.0 * math.pi) + math.log(ssr / n))


def ols(dm: DesignMatrix) -> EstimationResult:
    """Pooled ordinary least squares on the stacked sample.

    Solves the normal equations with an SPD solve and reports the ordinary
    covariance s^2 (X'X)^-1. Weighted and unweighted statistics coincide.
    """
    x, y = dm.x, dm.y
    n, k = x.shape
    _check_rank(x, dm.columns)
    xtx = x.T @ x
    beta = spd_solve(xtx, x.T @ y, name="normal equations")
    residuals = y - x @ beta
    df = n - k
    if df <= 0:
        raise EstimationError(f"no residual degrees of freedom: n={n}, k={k}")
    ssr = float(residuals @ residuals)
    cov = symmetrize((ssr / df) * spd_inverse(xtx, name="normal equations"),
                     name="coefficient covariance")
    se, t, p = _inference(beta, cov, df)
    stats = _fit_stats(y, residuals, k_params=k, df_resid=df)
    return EstimationResult(
        method="pooled-ols",
        names=dm.columns,
        coefficients=beta,
        covariance=cov,
        std_errors=se,
        t_stats=t,
        p_values=p,
        n_obs=n,
        k_params=k,
        df_resid=df,
        obs_index=dm.obs_index,
        residuals_unweighted=residuals,
        residuals_weighted=residuals,
        weighted_stats=stats,
        unweighted_stats=stats,
        log_likelihood=_log_likelihood(n, ssr),
    )


def _slope_columns(dm: DesignMatrix) -> tuple[np.ndarray, tuple[str, ...]]:
    if dm.has_intercept:
        return dm.x[:, 1:], dm.columns[1:]
    return dm.x, dm.columns


def fixed_effects(dm: DesignMatrix) -> EstimationResult:
    """Cross-section fixed effects via the within (entity-demeaning) transform.

    Slope covariance uses df = n - N - k_slopes; the log-likelihood is kept
    for the redundancy test. R-squared is reported LSDV-style, against the
    original dependent variable.
    """
    slopes, slope_names = _slope_columns(dm)
    if slopes.shape[1] == 0:
        raise EstimationError("fixed effects need at least one non-intercept regressor")
    n, k_slopes = slopes.shape
    n_entities = dm.n_entities
    notes: tuple[str, ...] = ()
    if n_entities < 2:
        warnings.warn("fixed effects on a single entity reduce to demeaned OLS", stacklevel=2)
        notes = ("single-entity panel: effects absorb only the intercept",)

    y_within = np.empty_like(dm.y)
    x_within = np.empty_like(slopes)
    entity_means_y: dict[str, float] = {}
    entity_means_x: dict[str, np.ndarray] = {}
    for entity, start, stop in dm.entity_blocks:
        rows = slice(start, stop)
        my = dm.y[rows].mean()
        mx = slopes[rows].mean(axis=0)
        y_within[rows] = dm.y[rows] - my
        x_within[rows] = slopes[rows] - mx
        entity_means_y[entity] = float(my)
        entity_means_x[entity] = mx

    scale = float(np.max(np.abs(slopes))) or 1.0
    for j, name in enumerate(slope_names):
        if float(np.max(np.abs(x_within[:, j]))) <= 1e-12 * scale:
            raise EstimationError(
                f"regressor {name!r} has no within-entity variation"
            )
    _check_rank(x_within, slope_names)

    df = n - n_entities - k_slopes
    if df <= 0:
        raise EstimationError(
            f"no residual degrees of freedom: n={n}, N={n_entities}, k_slopes={k_slopes}"
        )
    xtx = x_within.T @ x_within
    beta = spd_solve(xtx, x_within.T @ y_within, name="within normal equations")
    residuals = y_within - x_within @ beta
    ssr = float(residuals @ residuals)
    cov = symmetrize((ssr / df) * spd_inverse(xtx, name="within normal equations"),
                     name="coefficient covariance")
    se, t, p = _inference(beta, cov, df)

    effects = {
        e: entity_means_y[e] - float(entity_means_x[e] @ beta) for e in entity_means_y
    }
    k_eff = n_entities + k_slopes
    stats = _fit_stats(dm.y, residuals, k_params=k_eff, df_resid=df,
                       f_df1=n_entities - 1 + k_slopes)
    return EstimationResult(
        method="fixed-effects",
        names=slope_names,
        coefficients=beta,
        covariance=cov,
        std_errors=se,
        t_stats=t,
        p_values=p,
        n_obs=n,
        k_params=k_eff,
        df_resid=df,
        obs_index=dm.obs_index,
        residuals_unweighted=residuals,
        residuals_weighted=residuals,
        weighted_stats=stats,
        unweighted_stats=stats,
        log_likelihood=_log_likelihood(n, ssr),
        entity_effects=effects,
        notes=notes,
    )


def _swamy_arora_components(dm: DesignMatrix) -> tuple[float, float]:
    """Swamy-Arora variance components (sigma2_e, sigma2_u), sigma2_u floored at 0."""
    fe = fixed_effects(dm)
    sigma2_e = fe.unweighted_stats.ssr / fe.df_resid

    n_entities = dm.n_entities
    k_between = dm.k_params
    if n_entities <= k_between:
        raise EstimationError(
            f"variance components not estimable: N={n_entities} <= k={k_between}"
        )
    between_y = np.empty(n_entities)
    between_x = np.empty((n_entities, k_between))
    sizes = np.empty(n_entities)
    for idx, (entity, start, stop) in enumerate(dm.entity_blocks):
        rows = slice(start, stop)
        between_y[idx] = dm.y[rows].mean()
        between_x[idx] = dm.x[rows].mean(axis=0)
        sizes[idx] = stop - start
    _check_rank(between_x, dm.columns)
    bxx = between_x.T @ between_x
    b_between = spd_solve(bxx, between_x.T @ between_y, name="between normal equations")
    resid_between = between_y - between_x @ b_between
    ssr_between = float(resid_between @ resid_between)
    # Between residual variance is sigma2_u + sigma2_e / T_i; with unbalanced
    # blocks the correction uses the average of 1 / T_i.
    sigma2_u = max(0.0, ssr_between / (n_entities - k_between)
                   - sigma2_e * float(np.mean(1.0 / sizes)))
    return float(sigma2_e), float(sigma2_u)


def random_effects(
    dm: DesignMatrix, *, components: tuple[float, float] | None = None
) -> EstimationResult:
    """Random effects GLS with Swamy-Arora variance components.

    Quasi-demeans each entity with theta_i = 1 - sqrt(sigma2_e /
    (T_i sigma2_u + sigma2_e)), then runs OLS on the transformed data.
    ``components`` overrides estimation with known (sigma2_e, sigma2_u),
    which is useful for validating the transform against exact GLS.
    """
    if not dm.has_intercept:
        raise EstimationError("random effects require an intercept in the model")
    sigma2_e, sigma2_u = components if components is not None else _swamy_arora_components(dm)
    if sigma2_e <= 0.0:
        raise EstimationError(f"non-positive idiosyncratic variance {sigma2_e!r}")

    n, k = dm.x.shape
    y_star = np.empty_like(dm.y)
    x_star = np.empty_like(dm.x)
    theta: dict[str, float] = {}
    for entity, start, stop in dm.entity_blocks:
        rows = slice(start, stop)
        t_i = stop - start
        th = 1.0 - math.sqrt(sigma2_e / (t_i * sigma2_u + sigma2_e))
        theta[entity] = th
        y_star[rows] = dm.y[rows] - th * dm.y[rows].mean()
        x_star[rows] = dm.x[rows] - th * dm.x[rows].mean(axis=0)

    _check_rank(x_star, dm.columns)
    xtx = x_star.T @ x_star
    beta = spd_solve(xtx, x_star.T @ y_star, name="quasi-demeaned normal equations")
    resid_star = y_star - x_star @ beta
    residuals = dm.y - dm.x @ beta
    df = n - k
    ssr_star = float(resid_star @ resid_star)
    cov = symmetrize((ssr_star / df) * spd_inverse(xtx, name="quasi-demeaned normal equations"),
                     name="coefficient covariance")
    se, t, p = _inference(beta, cov, df)
    return EstimationResult(
        method="random-effects",
        names=dm.columns,
        coefficients=beta,
        covariance=cov,
        std_errors=se,
        t_stats=t,
        p_values=p,
        n_obs=n,
        k_params=k,
        df_resid=df,
        obs_index=dm.obs_index,
        residuals_unweighted=residuals,
        residuals_weighted=resid_star,
        weighted_stats=_fit_stats(y_star, resid_star, k_params=k, df_resid=df),
        unweighted_stats=_fit_stats(dm.y, residuals, k_params=k, df_resid=df),
        variance_components=(sigma2_e, sigma2_u),
        theta=theta,
    )


def estimate_period_omega(
    residuals: np.ndarray, obs_index: Sequence[tuple[str, int]]
) -> PeriodCovariance:
    """Across-period residual covariance averaged with pairwise entity counts.

    Entry (s, t) is the mean of e_i(s) * e_i(t) over the entities observing
    both years. Any year pair never co-observed means the sample is too
    fragmented for period weighting.
    """
    residuals = np.asarray(residuals, dtype=float)
    if residuals.shape[0] != len(obs_index):
        raise EstimationError("residual vector does not match its observation index")
    entities: list[str] = []
    for entity, _ in obs_index:
        if entity not in entities:
            entities.append(entity)
    years = sorted({yr for _, yr in obs_index})
    year_pos = {yr: j for j, yr in enumerate(years)}
    entity_pos = {e: i for i, e in enumerate(entities)}

    grid = np.zeros((len(entities), len(years)))
    present = np.zeros_like(grid, dtype=bool)
    for value, (entity, year) in zip(residuals, obs_index):
        grid[entity_pos[entity], year_pos[year]] = value
        present[entity_pos[entity], year_pos[year]] = True

    counts = present.astype(float).T @ present.astype(float)
    if np.any(counts == 0):
        s, t = np.argwhere(counts == 0)[0]
        raise EstimationError(
            f"period covariance not estimable: years {years[s]} and {years[t]} "
            "are never observed for the same entity"
        )
    sums = grid.T @ grid
    omega = symmetrize(sums / counts, name="period covariance")
    return PeriodCovariance(
        omega=omega, period_labels=tuple(years), pair_counts=counts.astype(int)
    )


def _transform_by_period(
    dm: DesignMatrix, root: np.ndarray, labels: Sequence[int]
) -> tuple[np.ndarray, np.ndarray]:
    """Rotate each entity block by the root's rows/columns for its years."""
    pos = {yr: j for j, yr in enumerate(labels)}
    y_star = np.empty_like(dm.y)
    x_star = np.empty_like(dm.x)
    for entity, start, stop in dm.entity_blocks:
        rows = slice(start, stop)
        idx = [pos[yr] for _, yr in dm.obs_index[start:stop]]
        sub = root[np.ix_(idx, idx)]
        y_star[rows] = sub @ dm.y[rows]
        x_star[rows] = sub @ dm.x[rows]
    return y_star, x_star


def egls_period_sur(
    dm: DesignMatrix, *, omega: PeriodCovariance | None = None
) -> EstimationResult:
    """Panel EGLS with Period-SUR weighting (one-step weighting matrix).

    Stage 1 fits OLS, stage 2 estimates the across-period covariance from its
    residuals (skipped when ``omega`` is supplied), stage 3 rotates each
    entity block by the covariance's inverse square root, and stage 4 reruns
    OLS on the stacked transformed data. Ordinary covariance on the
    transformed data; use `pcse_covariance` for the robust version.
    """
    try:
        first_stage = ols(dm)
    except EstimationError as exc:
        raise EstimationError(f"first-stage OLS failed: {exc}") from exc
    if omega is None:
        try:
            omega = estimate_period_omega(first_stage.residuals_unweighted, dm.obs_index)
        except EstimationError as exc:
            raise EstimationError(f"period covariance stage failed: {exc}") from exc
    elif tuple(omega.period_labels) != tuple(dm.years):
        raise EstimationError(
            "supplied period covariance does not cover the estimation years"
        )
    try:
        root = inverse_sqrt(omega.omega, name="period covariance")
    except EstimationError as exc:
        raise EstimationError(f"period covariance stage failed: {exc}") from exc

    y_star, x_star = _transform_by_period(dm, root, omega.period_labels)
    _check_rank(x_star, dm.columns)
    n, k = x_star.shape
    df = n - k
    xtx = x_star.T @ x_star
    beta = spd_solve(xtx, x_star.T @ y_star, name="weighted normal equations")
    resid_star = y_star - x_star @ beta
    residuals = dm.y - dm.x @ beta
    ssr_star = float(resid_star @ resid_star)
    cov = symmetrize((ssr_star / df) * spd_inverse(xtx, name="weighted normal equations"),
                     name="coefficient covariance")
    se, t, p = _inference(beta, cov, df)
    return EstimationResult(
        method="egls-period-sur",
        names=dm.columns,
        coefficients=beta,
        covariance=cov,
        std_errors=se,
        t_stats=t,
        p_values=p,
        n_obs=n,
        k_params=k,
        df_resid=df,
        obs_index=dm.obs_index,
        residuals_unweighted=residuals,
        residuals_weighted=resid_star,
        weighted_stats=_fit_stats(y_star, resid_star, k_params=k, df_resid=df),
        unweighted_stats=_fit_stats(dm.y, residuals, k_params=k, df_resid=df),
        log_likelihood=_log_likelihood(n, ssr_star),
        omega=omega,
    )


def pcse_covariance(
    dm: DesignMatrix, omega: PeriodCovariance, coefficients: np.ndarray
) -> np.ndarray:
    """Panel-corrected (Period SUR) coefficient covariance, d.f. corrected.

    Sandwich on the transformed data: with X* the weighted regressors and
    Omega~ the period covariance re-estimated from the weighted residuals,
    returns (X*'X*)^-1 X*' blockdiag(Omega~) X* (X*'X*)^-1 * n/(n-k).
    """
    root = inverse_sqrt(omega.omega, name="period covariance")
    y_star, x_star = _transform_by_period(dm, root, omega.period_labels)
    beta = np.asarray(coefficients, dtype=float)
    resid_star = y_star - x_star @ beta
    try:
        omega_tilde = estimate_period_omega(resid_star, dm.obs_index)
    except EstimationError as exc:
        raise EstimationError(f"PCSE covariance stage failed: {exc}") from exc

    pos = {yr: j for j, yr in enumerate(omega_tilde.period_labels)}
    k = x_star.shape[1]
    middle = np.zeros((k, k))
    for entity, start, stop in dm.entity_blocks:
        rows = slice(start, stop)
        idx = [pos[yr] for _, yr in dm.obs_index[start:stop]]
        block = omega_tilde.omega[np.ix_(idx, idx)]
        middle += x_star[rows].T @ block @ x_star[rows]
    bread = spd_inverse(x_star.T @ x_star, name="weighted normal equations")
    cov = bread @ middle @ bread * _df_correction(dm.n_obs, k)
    return symmetrize(cov, name="PCSE covariance")


def durbin_watson(residuals) -> float:
    """Durbin-Watson statistic of an ordered residual vector."""
    e = np.asarray(residuals, dtype=float).ravel()
    if e.size < 2:
        raise EstimationError("Durbin-Watson requires at least 2 residuals")
    ssr = float(e @ e)
    if ssr <= 0.0:
        raise EstimationError("Durbin-Watson is undefined for all-zero residuals")
    diffs = np.diff(e)
    return float(diffs @ diffs) / ssr


def estimate(
    dm: DesignMatrix, *, weighting: str = "none", covariance: str = "ordinary"
) -> EstimationResult:
    """Dispatch a model fit by weighting and covariance choice."""
    if weighting == "period-sur":
        result = egls_period_sur(dm)
        if covariance == "pcse-period-sur":
            cov = pcse_covariance(dm, result.omega, result.coefficients)
            return result.with_covariance(cov, "pcse-period-sur")
        return result
    if weighting != "none":
        raise EstimationError(f"unknown weighting {weighting!r}")
    if covariance == "pcse-period-sur":
        raise EstimationError("pcse-period-sur covariance requires period-sur weighting")
    return ols(dm)
