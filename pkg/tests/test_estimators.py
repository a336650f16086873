"""Estimator correctness against hand values and brute-force oracles."""

import dataclasses
import math

import numpy as np
import pytest

from panelsur.errors import EstimationError
from panelsur.estimators import (
    PeriodCovariance,
    durbin_watson,
    egls_period_sur,
    estimate,
    estimate_period_omega,
    fixed_effects,
    ols,
    pcse_covariance,
    random_effects,
)
from panelsur.panel import DesignMatrix, ModelSpec, assemble, build_panel

from conftest import make_design


def intercept_only_design(y, obs_index=None):
    y = np.asarray(y, dtype=float)
    n = y.size
    if obs_index is None:
        obs_index = tuple(("AA", 2000 + i) for i in range(n))
    blocks = []
    start = 0
    for ent in dict.fromkeys(e for e, _ in obs_index):
        stop = start + sum(1 for e, _ in obs_index if e == ent)
        blocks.append((ent, start, stop))
        start = stop
    return DesignMatrix(
        y=y,
        x=np.ones((n, 1)),
        columns=("C",),
        obs_index=tuple(obs_index),
        entity_blocks=tuple(blocks),
        years=tuple(sorted({yr for _, yr in obs_index})),
        sample=(min(yr for _, yr in obs_index), max(yr for _, yr in obs_index)),
        has_intercept=True,
        balanced=True,
    )


class TestOls:
    def test_exact_fit(self):
        rng = np.random.default_rng(31)
        dm = make_design(rng, n_entities=3, n_years=4, noise=0.0)
        result = ols(dm)
        assert np.max(np.abs(result.residuals_unweighted)) <= 1e-12
        assert abs(result.weighted_stats.r_squared - 1.0) <= 1e-12
        assert result.weighted_stats.ssr <= 1e-20

    def test_intercept_only_hand_value(self):
        result = ols(intercept_only_design([1.0, 2.0, 2.0]))
        assert abs(result.coefficients[0] - 5.0 / 3.0) <= 1e-15
        assert abs(result.unweighted_stats.ssr - 2.0 / 3.0) <= 1e-15

    def test_duplicate_column_rejected(self):
        rng = np.random.default_rng(33)
        rows = []
        for ent in ("AA", "BB"):
            for yr in range(2000, 2005):
                x = float(rng.normal())
                rows += [(ent, yr, "x1", x), (ent, yr, "x2", x),
                         (ent, yr, "y", float(rng.normal()))]
        dm = assemble(
            build_panel(rows),
            ModelSpec("y", (("x1", 0), ("x2", 0)), sample=(2000, 2004)),
        )
        with pytest.raises(EstimationError, match="rank deficient"):
            ols(dm)

    def test_residual_orthogonality(self):
        rng = np.random.default_rng(34)
        for _ in range(5):
            dm = make_design(rng, n_entities=5, n_years=6, k_slopes=3)
            result = ols(dm)
            scale = max(1.0, float(np.max(np.abs(dm.x.T @ dm.y))))
            assert np.max(np.abs(dm.x.T @ result.residuals_unweighted)) <= 1e-8 * scale

    def test_weighted_equals_unweighted(self):
        rng = np.random.default_rng(35)
        dm = make_design(rng)
        result = ols(dm)
        assert result.weighted_stats == result.unweighted_stats

    def test_inference_invariants(self):
        rng = np.random.default_rng(36)
        dm = make_design(rng, n_entities=5, n_years=8)
        result = ols(dm)
        assert np.allclose(result.std_errors, np.sqrt(np.diag(result.covariance)),
                           rtol=0, atol=0)
        assert np.allclose(result.t_stats, result.coefficients / result.std_errors,
                           rtol=0, atol=0)
        assert np.all(result.p_values >= 0) and np.all(result.p_values <= 1)
        stats = result.unweighted_stats
        assert 0.0 <= stats.r_squared <= 1.0
        expected_adj = 1 - (1 - stats.r_squared) * (result.n_obs - 1) / result.df_resid
        assert abs(stats.adj_r_squared - expected_adj) <= 1e-14
        assert abs(stats.se_regression - math.sqrt(stats.ssr / result.df_resid)) <= 1e-14


def scale_invariance_checks(fit):
    rng = np.random.default_rng(37)
    dm = make_design(rng, n_entities=5, n_years=5, ar=0.4)
    c = 3.7
    scaled = dataclasses.replace(dm, y=dm.y * c)
    base, scaled_fit = fit(dm), fit(scaled)
    assert np.allclose(scaled_fit.coefficients, c * base.coefficients, rtol=1e-10)
    assert np.allclose(scaled_fit.std_errors, c * base.std_errors, rtol=1e-9)
    assert np.allclose(scaled_fit.t_stats, base.t_stats, rtol=1e-9)
    assert np.allclose(scaled_fit.p_values, base.p_values, rtol=0, atol=1e-12)
    for attr in ("r_squared", "durbin_watson"):
        assert abs(
            getattr(scaled_fit.weighted_stats, attr) - getattr(base.weighted_stats, attr)
        ) <= 1e-10


class TestScaleInvariance:
    def test_ols(self):
        scale_invariance_checks(ols)

    def test_egls(self):
        scale_invariance_checks(egls_period_sur)


class TestFixedEffects:
    def lsdv(self, dm):
        dummies = np.zeros((dm.n_obs, dm.n_entities))
        for col, (_, start, stop) in enumerate(dm.entity_blocks):
            dummies[start:stop, col] = 1.0
        x = np.column_stack([dummies, dm.x[:, 1:]])
        beta, *_ = np.linalg.lstsq(x, dm.y, rcond=None)
        resid = dm.y - x @ beta
        df = dm.n_obs - dm.n_entities - (dm.k_params - 1)
        cov = (resid @ resid / df) * np.linalg.inv(x.T @ x)
        return beta[dm.n_entities:], np.sqrt(np.diag(cov))[dm.n_entities:]

    def test_equals_lsdv(self):
        rng = np.random.default_rng(41)
        for _ in range(5):
            dm = make_design(rng, n_entities=4, n_years=5,
                             entity_effects=rng.normal(size=4) * 2.0)
            fe = fixed_effects(dm)
            slopes, errors = self.lsdv(dm)
            assert np.max(np.abs(fe.coefficients - slopes)) <= 1e-10
            assert np.max(np.abs(fe.std_errors - errors)) <= 1e-10

    def test_no_within_variation_rejected(self):
        rows = []
        rng = np.random.default_rng(42)
        for i, ent in enumerate(("AA", "BB", "CC")):
            for yr in range(2000, 2004):
                rows += [(ent, yr, "flag", float(i)),
                         (ent, yr, "y", float(rng.normal()))]
        dm = assemble(build_panel(rows),
                      ModelSpec("y", (("flag", 0),), sample=(2000, 2003)))
        with pytest.raises(EstimationError, match="within-entity variation"):
            fixed_effects(dm)

    def test_single_entity_flagged(self):
        rng = np.random.default_rng(43)
        dm = make_design(rng, n_entities=1, n_years=8)
        with pytest.warns(UserWarning, match="single entity"):
            fe = fixed_effects(dm)
        assert fe.notes
        # equals OLS on demeaned data with the intercept absorbed
        y_c = dm.y - dm.y.mean()
        x_c = dm.x[:, 1:] - dm.x[:, 1:].mean(axis=0)
        beta, *_ = np.linalg.lstsq(x_c, y_c, rcond=None)
        assert np.max(np.abs(fe.coefficients - beta)) <= 1e-12

    def test_entity_effects_reproduce_fit(self):
        rng = np.random.default_rng(44)
        dm = make_design(rng, n_entities=3, n_years=6,
                         entity_effects=np.array([0.0, 2.0, -1.0]))
        fe = fixed_effects(dm)
        for ent, start, stop in dm.entity_blocks:
            fitted = fe.entity_effects[ent] + dm.x[start:stop, 1:] @ fe.coefficients
            assert np.allclose(dm.y[start:stop] - fitted,
                               fe.residuals_unweighted[start:stop], atol=1e-12)


def zero_between_design(rng, n_entities=4, n_years=6):
    """Entity means lie exactly on a plane, so the between SSR is zero."""
    rows = []
    for i in range(n_entities):
        ent = f"E{i:02d}"
        base_x = float(i)
        noise = rng.normal(size=n_years)
        noise -= noise.mean()  # kill the entity effect exactly
        xs = rng.normal(size=n_years)
        xs = xs - xs.mean() + base_x  # entity mean of x is exactly base_x
        for t, yr in enumerate(range(2000, 2000 + n_years)):
            y = 1.0 + 0.5 * float(xs[t]) + float(noise[t])
            rows += [(ent, yr, "x1", float(xs[t])), (ent, yr, "y", y)]
    return assemble(build_panel(rows),
                    ModelSpec("y", (("x1", 0),), sample=(2000, 2000 + n_years - 1)))


class TestRandomEffects:
    def test_zero_between_variance_equals_pooled(self):
        rng = np.random.default_rng(51)
        dm = zero_between_design(rng)
        re = random_effects(dm)
        pooled = ols(dm)
        assert re.variance_components[1] == 0.0
        assert all(theta == 0.0 for theta in re.theta.values())
        assert np.max(np.abs(re.coefficients - pooled.coefficients)) <= 1e-10

    def test_small_idiosyncratic_variance_approaches_fe(self):
        rng = np.random.default_rng(52)
        dm = make_design(rng, n_entities=6, n_years=6, noise=1e-4,
                         entity_effects=rng.normal(size=6) * 5.0)
        re = random_effects(dm)
        fe = fixed_effects(dm)
        assert all(theta >= 0.999 for theta in re.theta.values())
        assert np.max(np.abs(re.coefficients[1:] - fe.coefficients)) <= 1e-2

    def test_planted_components_match_exact_gls(self):
        rng = np.random.default_rng(53)
        sigma2_e, sigma2_u = 0.7, 1.9
        dm = make_design(rng, n_entities=4, n_years=5,
                         entity_effects=rng.normal(size=4))
        re = random_effects(dm, components=(sigma2_e, sigma2_u))
        # brute-force GLS with the block covariance sigma2_u J + sigma2_e I
        t = 5
        omega_i = sigma2_u * np.ones((t, t)) + sigma2_e * np.eye(t)
        w = np.linalg.inv(omega_i)
        xtwx = np.zeros((dm.k_params, dm.k_params))
        xtwy = np.zeros(dm.k_params)
        for _, start, stop in dm.entity_blocks:
            xi, yi = dm.x[start:stop], dm.y[start:stop]
            xtwx += xi.T @ w @ xi
            xtwy += xi.T @ w @ yi
        expected = np.linalg.solve(xtwx, xtwy)
        assert np.max(np.abs(re.coefficients - expected)) <= 1e-8

    def test_too_few_entities_rejected(self):
        rng = np.random.default_rng(54)
        dm = make_design(rng, n_entities=3, n_years=8, k_slopes=3)
        with pytest.raises(EstimationError, match="not estimable"):
            random_effects(dm)


class TestPeriodOmega:
    def test_identical_residuals_outer_product(self):
        e = np.array([0.5, -1.0, 0.7])
        residuals = np.tile(e, 4)
        obs = [(f"E{i}", yr) for i in range(4) for yr in (2000, 2001, 2002)]
        omega = estimate_period_omega(residuals, obs)
        assert np.allclose(omega.omega, np.outer(e, e), rtol=0, atol=1e-15)

    def test_hand_two_by_two(self):
        residuals = np.array([1.0, 0.0, 0.0, 1.0])
        obs = [("A", 2000), ("A", 2001), ("B", 2000), ("B", 2001)]
        omega = estimate_period_omega(residuals, obs)
        assert np.array_equal(omega.omega, 0.5 * np.eye(2))

    def test_balanced_counts(self):
        rng = np.random.default_rng(61)
        obs = [(f"E{i}", yr) for i in range(5) for yr in range(2000, 2004)]
        omega = estimate_period_omega(rng.normal(size=20), obs)
        assert np.all(omega.pair_counts == 5)

    def test_fragmented_sample_rejected(self):
        obs = [("A", 2000), ("A", 2001), ("B", 2002), ("B", 2003)]
        with pytest.raises(EstimationError, match="never observed"):
            estimate_period_omega(np.ones(4), obs)


def brute_force_gls(dm, omega_inv_blocks):
    k = dm.k_params
    xtwx = np.zeros((k, k))
    xtwy = np.zeros(k)
    for (_, start, stop), w in zip(dm.entity_blocks, omega_inv_blocks):
        xi, yi = dm.x[start:stop], dm.y[start:stop]
        xtwx += xi.T @ w @ xi
        xtwy += xi.T @ w @ yi
    return np.linalg.solve(xtwx, xtwy)


class TestEglsPeriodSur:
    def identity_omega(self, dm, scale=1.0):
        t = len(dm.years)
        return PeriodCovariance(
            omega=scale * np.eye(t),
            period_labels=dm.years,
            pair_counts=np.full((t, t), dm.n_entities),
        )

    def test_identity_omega_equals_ols(self):
        rng = np.random.default_rng(71)
        dm = make_design(rng, n_entities=4, n_years=4)
        pooled = ols(dm)
        weighted = egls_period_sur(dm, omega=self.identity_omega(dm))
        assert np.max(np.abs(weighted.coefficients - pooled.coefficients)) <= 1e-12
        assert np.max(np.abs(weighted.residuals_unweighted
                             - pooled.residuals_unweighted)) <= 1e-12

    def test_scaled_identity_invariance(self):
        rng = np.random.default_rng(72)
        dm = make_design(rng, n_entities=4, n_years=4)
        pooled = ols(dm)
        weighted = egls_period_sur(dm, omega=self.identity_omega(dm, scale=3.7))
        assert np.max(np.abs(weighted.coefficients - pooled.coefficients)) <= 1e-12

    def test_balanced_brute_force_oracle(self):
        rng = np.random.default_rng(73)
        for _ in range(5):
            dm = make_design(rng, n_entities=4, n_years=3, ar=0.5)
            result = egls_period_sur(dm)
            w = np.linalg.inv(result.omega.omega)
            expected = brute_force_gls(dm, [w] * dm.n_entities)
            assert np.max(np.abs(result.coefficients - expected)) <= 1e-10

    def test_unbalanced_brute_force_oracle(self):
        # unbalanced panel (one missing cell); the entity with the hole is
        # weighted by the rows/columns of the inverse square root matching
        # its observed years
        rng = np.random.default_rng(213)
        dm = make_design(rng, n_entities=4, n_years=3, ar=0.6,
                         drop={("E01", 2001)})
        assert dm.n_obs == 11
        assert not dm.balanced
        result = egls_period_sur(dm)
        from panelsur.numerics import inverse_sqrt

        root = inverse_sqrt(result.omega.omega)
        pos = {yr: j for j, yr in enumerate(result.omega.period_labels)}
        blocks = []
        for ent, start, stop in dm.entity_blocks:
            idx = [pos[yr] for _, yr in dm.obs_index[start:stop]]
            sub = root[np.ix_(idx, idx)]
            blocks.append(sub @ sub)
        expected = brute_force_gls(dm, blocks)
        assert np.max(np.abs(result.coefficients - expected)) <= 1e-10

    def test_weighted_residual_orthogonality(self):
        rng = np.random.default_rng(74)
        dm = make_design(rng, n_entities=5, n_years=4, ar=0.3)
        result = egls_period_sur(dm)
        root = np.linalg.inv(np.linalg.cholesky(result.omega.omega))  # any PD check
        scale = max(1.0, float(np.max(np.abs(dm.x.T @ dm.y))))
        # transformed regressors are orthogonal to weighted residuals
        from panelsur.estimators import _transform_by_period
        from panelsur.numerics import inverse_sqrt

        s = inverse_sqrt(result.omega.omega)
        _, x_star = _transform_by_period(dm, s, result.omega.period_labels)
        assert np.max(np.abs(x_star.T @ result.residuals_weighted)) <= 1e-8 * scale

    def test_stage_failure_tagged(self):
        rng = np.random.default_rng(75)
        # two entities, five years: the period covariance has rank <= 2
        dm = make_design(rng, n_entities=2, n_years=5)
        with pytest.raises(EstimationError, match="period covariance stage"):
            egls_period_sur(dm)


class TestPcseCovariance:
    def test_spherical_collapse(self):
        # engineered weighted residuals (c,0),(0,c) give omega~ = c^2/2 I
        x = np.array([[1.0, 0.4], [1.0, -1.2], [1.0, 0.9], [1.0, 0.1]])
        beta = np.array([0.5, 2.0])
        c = 0.8
        e = np.array([c, 0.0, 0.0, c])
        y = x @ beta + e
        obs = (("A", 2000), ("A", 2001), ("B", 2000), ("B", 2001))
        dm = DesignMatrix(
            y=y, x=x, columns=("C", "x1"), obs_index=obs,
            entity_blocks=(("A", 0, 2), ("B", 2, 4)),
            years=(2000, 2001), sample=(2000, 2001),
            has_intercept=True, balanced=True,
        )
        omega = PeriodCovariance(np.eye(2), (2000, 2001), np.full((2, 2), 2))
        cov = pcse_covariance(dm, omega, beta)
        s2 = c * c / 2.0
        dfc = 4.0 / (4.0 - 2.0)
        expected = s2 * np.linalg.inv(x.T @ x) * dfc
        assert np.max(np.abs(cov - expected)) <= 1e-14

    def test_diagonal_nonnegative(self):
        rng = np.random.default_rng(81)
        for _ in range(5):
            dm = make_design(rng, n_entities=5, n_years=4, ar=0.4)
            result = egls_period_sur(dm)
            cov = pcse_covariance(dm, result.omega, result.coefficients)
            assert np.all(np.diag(cov) >= 0.0)

    def test_brute_force_sandwich(self):
        rng = np.random.default_rng(82)
        dm = make_design(rng, n_entities=4, n_years=3, ar=0.5)
        result = egls_period_sur(dm)
        cov = pcse_covariance(dm, result.omega, result.coefficients)

        from panelsur.estimators import _transform_by_period
        from panelsur.numerics import inverse_sqrt

        s = inverse_sqrt(result.omega.omega)
        y_star, x_star = _transform_by_period(dm, s, result.omega.period_labels)
        e_star = y_star - x_star @ result.coefficients
        tilde = estimate_period_omega(e_star, dm.obs_index)
        big = np.zeros((dm.n_obs, dm.n_obs))
        pos = {yr: j for j, yr in enumerate(tilde.period_labels)}
        for _, start, stop in dm.entity_blocks:
            idx = [pos[yr] for _, yr in dm.obs_index[start:stop]]
            big[start:stop, start:stop] = tilde.omega[np.ix_(idx, idx)]
        bread = np.linalg.inv(x_star.T @ x_star)
        n, k = x_star.shape
        expected = bread @ (x_star.T @ big @ x_star) @ bread * (n / (n - k))
        assert np.max(np.abs(cov - expected)) <= 1e-12

    def test_with_covariance_updates_inference(self):
        rng = np.random.default_rng(83)
        dm = make_design(rng, n_entities=4, n_years=4, ar=0.3)
        result = egls_period_sur(dm)
        cov = pcse_covariance(dm, result.omega, result.coefficients)
        updated = result.with_covariance(cov, "pcse-period-sur")
        assert updated.covariance_method == "pcse-period-sur"
        assert np.allclose(updated.std_errors, np.sqrt(np.diag(cov)), rtol=0, atol=0)
        assert np.array_equal(updated.coefficients, result.coefficients)


class TestEstimateDispatch:
    def test_period_sur_with_pcse(self):
        rng = np.random.default_rng(84)
        dm = make_design(rng, n_entities=4, n_years=4, ar=0.3)
        result = estimate(dm, weighting="period-sur", covariance="pcse-period-sur")
        assert result.method == "egls-period-sur"
        assert result.covariance_method == "pcse-period-sur"

    def test_plain_ols(self):
        rng = np.random.default_rng(85)
        dm = make_design(rng)
        assert estimate(dm).method == "pooled-ols"

    def test_invalid_combo(self):
        rng = np.random.default_rng(86)
        dm = make_design(rng)
        with pytest.raises(EstimationError, match="requires period-sur"):
            estimate(dm, weighting="none", covariance="pcse-period-sur")


class TestDurbinWatson:
    def test_constant_residuals(self):
        assert durbin_watson([1.0, 1.0, 1.0]) == 0.0

    def test_alternating_hand_value(self):
        assert durbin_watson([1.0, -1.0, 1.0, -1.0]) == 3.0

    def test_white_noise_near_two(self):
        rng = np.random.default_rng(91)
        assert 1.9 <= durbin_watson(rng.normal(size=10000)) <= 2.1

    def test_all_zero_rejected(self):
        with pytest.raises(EstimationError, match="all-zero"):
            durbin_watson([0.0, 0.0, 0.0])

    def test_too_short_rejected(self):
        with pytest.raises(EstimationError):
            durbin_watson([1.0])
