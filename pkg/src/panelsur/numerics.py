"""Dense symmetric linear algebra and distribution tail functions.

Matrix helpers operate on plain float64 numpy arrays. The tail functions are
scalar double-precision routines built on the regularized incomplete gamma
and beta integrals, using the classical series / continued-fraction branches
with the usual midpoint switch.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import EstimationError

__all__ = [
    "symmetrize",
    "spd_solve",
    "inverse_sqrt",
    "chi2_sf",
    "f_sf",
    "t_sf",
    "normal_cdf",
    "pearson",
    "EIGENVALUE_FLOOR",
]

# Relative eigenvalue floor below which a covariance matrix is treated as
# singular instead of being regularized.
EIGENVALUE_FLOOR = 1e-12

_MAX_ITER = 500
_EPS = 1e-16
_TINY = 1e-300


def symmetrize(a, *, name: str = "matrix", rtol: float = 1e-8) -> np.ndarray:
    """Validate a square array and return its exactly symmetric part.

    Rejects non-square or non-finite input and any array whose asymmetry
    exceeds ``rtol`` relative to its largest entry.
    """
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise EstimationError(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise EstimationError(f"{name} has non-finite entries")
    scale = float(np.max(np.abs(arr)))
    gap = float(np.max(np.abs(arr - arr.T)))
    if gap > rtol * max(scale, 1.0):
        raise EstimationError(f"{name} is not symmetric (max asymmetry {gap:.3e})")
    return 0.5 * (arr + arr.T)


def _cholesky_lower(a: np.ndarray, name: str) -> np.ndarray:
    """Cholesky factor of an SPD matrix, reporting the failing pivot index."""
    n = a.shape[0]
    lower = np.zeros_like(a)
    tol = 1e-13 * max(float(np.max(np.abs(np.diag(a)))), _TINY)
    for j in range(n):
        pivot = a[j, j] - lower[j, :j] @ lower[j, :j]
        if not pivot > tol:
            raise EstimationError(
                f"{name} is not positive definite: pivot {j} = {pivot:.6e}"
            )
        ljj = math.sqrt(pivot)
        lower[j, j] = ljj
        if j + 1 < n:
            lower[j + 1 :, j] = (a[j + 1 :, j] - lower[j + 1 :, :j] @ lower[j, :j]) / ljj
    return lower


def spd_solve(a, b, *, name: str = "matrix") -> np.ndarray:
    """Solve ``a @ x = b`` for symmetric positive definite ``a``.

    Uses a Cholesky factorization with forward/back substitution; the
    rejection message names the failing pivot when ``a`` is not SPD.
    """
    sym = symmetrize(a, name=name)
    rhs = np.asarray(b, dtype=float)
    lower = _cholesky_lower(sym, name)
    x = rhs.copy()
    n = lower.shape[0]
    for i in range(n):
        x[i] = (x[i] - lower[i, :i] @ x[:i]) / lower[i, i]
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - lower[i + 1 :, i] @ x[i + 1 :]) / lower[i, i]
    return x


def spd_inverse(a, *, name: str = "matrix") -> np.ndarray:
    """Inverse of a symmetric positive definite matrix via `spd_solve`."""
    arr = np.asarray(a, dtype=float)
    inv = spd_solve(arr, np.eye(arr.shape[0]), name=name)
    return 0.5 * (inv + inv.T)


def inverse_sqrt(a, *, name: str = "matrix") -> np.ndarray:
    """Symmetric inverse square root via symmetric eigendecomposition.

    Returns ``s`` with ``s @ a @ s = I``. Rejects matrices whose smallest
    eigenvalue falls at or below ``EIGENVALUE_FLOOR`` times the largest:
    a near-singular covariance signals too few cross-sections rather than
    something to regularize silently.
    """
    sym = symmetrize(a, name=name)
    eigenvalues, eigenvectors = np.linalg.eigh(sym)
    lam_min = float(eigenvalues[0])
    lam_max = float(eigenvalues[-1])
    floor = EIGENVALUE_FLOOR * max(lam_max, 0.0)
    if lam_max <= 0.0 or lam_min <= floor:
        raise EstimationError(
            f"{name} is numerically singular: min eigenvalue {lam_min:.6e} "
            f"at or below floor {floor:.6e}"
        )
    scaled = eigenvectors / np.sqrt(eigenvalues)
    out = scaled @ eigenvectors.T
    return 0.5 * (out + out.T)


def _reg_gamma_upper(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x), branch switch at a + 1."""
    if a <= 0.0 or x < 0.0:
        raise EstimationError("incomplete gamma requires a > 0 and x >= 0")
    if x == 0.0:
        return 1.0
    log_front = -x + a * math.log(x) - math.lgamma(a)
    if x < a + 1.0:
        # lower series, then complement
        term = 1.0 / a
        total = term
        denom = a
        for _ in range(_MAX_ITER):
            denom += 1.0
            term *= x / denom
            total += term
            if abs(term) < abs(total) * _EPS:
                return 1.0 - total * math.exp(log_front)
        raise EstimationError("incomplete gamma series failed to converge")
    # continued fraction (modified Lentz)
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h * math.exp(log_front)
    raise EstimationError("incomplete gamma continued fraction failed to converge")


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for the regularized incomplete beta (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise EstimationError("incomplete beta continued fraction failed to converge")


def _reg_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) with the symmetry switch."""
    if a <= 0.0 or b <= 0.0:
        raise EstimationError("incomplete beta requires positive shape parameters")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def _clip_probability(p: float) -> float:
    return min(1.0, max(0.0, p))


def chi2_sf(x: float, df: int) -> float:
    """Upper-tail probability of the chi-square distribution."""
    if df < 1:
        raise EstimationError(f"chi2_sf requires df >= 1, got {df}")
    if x < 0.0:
        raise EstimationError(f"chi2_sf requires x >= 0, got {x}")
    return _clip_probability(_reg_gamma_upper(0.5 * df, 0.5 * x))


def t_sf(x: float, df: int) -> float:
    """Upper-tail probability of Student's t distribution."""
    if df < 1:
        raise EstimationError(f"t_sf requires df >= 1, got {df}")
    if x == 0.0:
        return 0.5
    tail = 0.5 * _reg_beta(0.5 * df, 0.5, df / (df + x * x))
    return _clip_probability(tail if x > 0.0 else 1.0 - tail)


def f_sf(x: float, df1: int, df2: int) -> float:
    """Upper-tail probability of the F distribution."""
    if df1 < 1 or df2 < 1:
        raise EstimationError(f"f_sf requires df >= 1, got ({df1}, {df2})")
    if x <= 0.0:
        return 1.0
    return _clip_probability(_reg_beta(0.5 * df2, 0.5 * df1, df2 / (df2 + df1 * x)))


def normal_cdf(x: float) -> float:
    """Standard normal cumulative distribution function."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def pearson(x, y) -> float:
    """Sample Pearson correlation coefficient of two equal-length vectors."""
    xv = np.asarray(x, dtype=float).ravel()
    yv = np.asarray(y, dtype=float).ravel()
    if xv.size != yv.size:
        raise EstimationError(
            f"pearson requires equal lengths, got {xv.size} and {yv.size}"
        )
    if xv.size < 2:
        raise EstimationError("pearson requires at least 2 observations")
    dx = xv - xv.mean()
    dy = yv - yv.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx <= 0.0 or syy <= 0.0:
        raise EstimationError("pearson is undefined for a zero-variance vector")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))
