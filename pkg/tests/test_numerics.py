"""Linear algebra helpers and distribution tails against independent oracles."""

import math

import numpy as np
import pytest
from scipy import integrate

from panelsur.errors import EstimationError
from panelsur.numerics import (
    chi2_sf,
    f_sf,
    inverse_sqrt,
    normal_cdf,
    pearson,
    spd_solve,
    symmetrize,
    t_sf,
)


def random_spd(rng, n):
    a = rng.normal(size=(n, n))
    return a @ a.T + n * np.eye(n)


class TestSpdSolve:
    def test_identity(self):
        b = np.arange(6, dtype=float).reshape(3, 2)
        assert np.array_equal(spd_solve(np.eye(3), b), b)

    def test_diagonal(self):
        x = spd_solve(np.diag([4.0, 9.0]), np.eye(2))
        assert np.allclose(x, np.diag([0.25, 1.0 / 9.0]), rtol=0, atol=1e-15)

    def test_random_spd_residual(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            a = random_spd(rng, 5)
            b = rng.normal(size=(5, 3))
            x = spd_solve(a, b)
            assert np.max(np.abs(a @ x - b)) <= 1e-10

    def test_vector_rhs_shape(self):
        rng = np.random.default_rng(4)
        a = random_spd(rng, 4)
        b = rng.normal(size=4)
        assert spd_solve(a, b).shape == (4,)

    def test_not_positive_definite_names_pivot(self):
        a = np.array([[1.0, 2.0], [2.0, 1.0]])  # indefinite
        with pytest.raises(EstimationError, match="pivot 1"):
            spd_solve(a, np.eye(2))

    def test_asymmetric_rejected(self):
        a = np.array([[1.0, 0.5], [0.0, 1.0]])
        with pytest.raises(EstimationError, match="not symmetric"):
            spd_solve(a, np.eye(2))


class TestInverseSqrt:
    def test_identity(self):
        assert np.allclose(inverse_sqrt(np.eye(3)), np.eye(3), rtol=0, atol=1e-14)

    def test_scalar_diagonal(self):
        assert np.allclose(inverse_sqrt(np.diag([4.0])), np.diag([0.5]), rtol=0, atol=1e-15)

    def test_defining_identity(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            a = random_spd(rng, 4)
            s = inverse_sqrt(a)
            assert np.max(np.abs(s @ a @ s - np.eye(4))) <= 1e-10

    def test_commutes_with_argument(self):
        rng = np.random.default_rng(12)
        a = random_spd(rng, 5)
        s = inverse_sqrt(a)
        scale = np.max(np.abs(a))
        assert np.max(np.abs(s @ a - a @ s)) <= 1e-9 * scale

    def test_near_singular_rejected(self):
        a = np.diag([1.0, 1e-14])
        with pytest.raises(EstimationError, match="singular"):
            inverse_sqrt(a)

    def test_negative_definite_rejected(self):
        with pytest.raises(EstimationError):
            inverse_sqrt(-np.eye(2))


def chi2_sf_quadrature(x, df):
    def density(t):
        return math.exp((0.5 * df - 1.0) * math.log(t) - 0.5 * t
                        - math.lgamma(0.5 * df) - 0.5 * df * math.log(2.0))

    value, _ = integrate.quad(density, x, np.inf, epsabs=1e-13, epsrel=1e-13, limit=200)
    return value


class TestChi2Sf:
    def test_zero_statistic(self):
        for df in (1, 2, 5, 30):
            assert chi2_sf(0.0, df) == 1.0

    def test_df2_is_exponential(self):
        assert abs(chi2_sf(2.0, 2) - math.exp(-1.0)) <= 1e-12

    def test_against_quadrature(self):
        for x, df in [(12.0, 3), (0.5, 1), (7.3, 7), (25.0, 10), (3.9, 4)]:
            assert abs(chi2_sf(x, df) - chi2_sf_quadrature(x, df)) <= 1e-10

    def test_monotone_and_bounded(self):
        xs = np.linspace(0.0, 40.0, 200)
        for df in (1, 4, 9):
            values = [chi2_sf(float(x), df) for x in xs]
            assert all(0.0 <= v <= 1.0 for v in values)
            assert all(a >= b - 1e-15 for a, b in zip(values, values[1:]))

    def test_invalid_input(self):
        with pytest.raises(EstimationError):
            chi2_sf(-1.0, 3)
        with pytest.raises(EstimationError):
            chi2_sf(1.0, 0)


def beta_integral_quadrature(a, b, x):
    def density(t):
        return math.exp((a - 1.0) * math.log(t) + (b - 1.0) * math.log1p(-t)
                        + math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b))

    value, _ = integrate.quad(density, 0.0, x, epsabs=1e-13, epsrel=1e-13, limit=200)
    return value


class TestStudentAndF:
    def test_t_symmetry_at_zero(self):
        for df in (1, 7, 50):
            assert t_sf(0.0, df) == 0.5

    def test_t_two_sided_consistency(self):
        for df in (3, 12):
            for x in (0.7, 2.1):
                assert abs(t_sf(x, df) + t_sf(-x, df) - 1.0) <= 1e-14

    def test_t_against_quadrature(self):
        # P(T > x) = I_{df/(df+x^2)}(df/2, 1/2) / 2 computed by quadrature
        for x, df in [(1.3, 5), (2.0, 20), (0.4, 2)]:
            expected = 0.5 * beta_integral_quadrature(0.5 * df, 0.5, df / (df + x * x))
            assert abs(t_sf(x, df) - expected) <= 1e-9

    def test_f_median_at_one(self):
        for df in (1, 4, 9, 40):
            expected = beta_integral_quadrature(0.5 * df, 0.5 * df, 0.5)
            assert abs(f_sf(1.0, df, df) - expected) <= 1e-9
            assert abs(f_sf(1.0, df, df) - 0.5) <= 1e-9

    def test_f_against_quadrature(self):
        for x, df1, df2 in [(2.5, 4, 191), (0.8, 2, 7), (5.0, 10, 3)]:
            expected = beta_integral_quadrature(0.5 * df2, 0.5 * df1, df2 / (df2 + df1 * x))
            assert abs(f_sf(x, df1, df2) - expected) <= 1e-9

    def test_f_at_zero(self):
        assert f_sf(0.0, 3, 5) == 1.0

    def test_normal_cdf(self):
        assert normal_cdf(0.0) == 0.5
        assert abs(normal_cdf(1.959963984540054) - 0.975) <= 1e-12
        assert abs(normal_cdf(-1.0) + normal_cdf(1.0) - 1.0) <= 1e-15


class TestPearson:
    def test_self_correlation(self):
        x = np.array([0.3, 1.7, -2.2, 0.9])
        assert pearson(x, x) == 1.0

    def test_negated(self):
        x = np.array([0.3, 1.7, -2.2, 0.9])
        assert pearson(x, -x) == -1.0

    def test_hand_value(self):
        # direct formula: sxy / sqrt(sxx * syy) = 3 / sqrt(2 * 14/3)
        expected = 3.0 / math.sqrt(2.0 * 14.0 / 3.0)
        assert abs(pearson([1, 2, 3], [1, 2, 4]) - expected) <= 1e-15

    def test_affine_invariance(self):
        rng = np.random.default_rng(21)
        x = rng.normal(size=30)
        y = rng.normal(size=30)
        base = pearson(x, y)
        assert abs(pearson(2.5 * x + 7.0, y) - base) <= 1e-12
        assert abs(pearson(x, 0.2 * y - 3.0) - base) <= 1e-12

    def test_zero_variance_rejected(self):
        with pytest.raises(EstimationError, match="zero-variance"):
            pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_length_errors(self):
        with pytest.raises(EstimationError):
            pearson([1.0], [2.0])
        with pytest.raises(EstimationError):
            pearson([1.0, 2.0], [1.0, 2.0, 3.0])


class TestSymmetrize:
    def test_small_asymmetry_averaged(self):
        a = np.array([[1.0, 0.5 + 1e-12], [0.5, 2.0]])
        out = symmetrize(a)
        assert out[0, 1] == out[1, 0]

    def test_non_finite_rejected(self):
        with pytest.raises(EstimationError, match="non-finite"):
            symmetrize(np.array([[np.nan, 0.0], [0.0, 1.0]]))
