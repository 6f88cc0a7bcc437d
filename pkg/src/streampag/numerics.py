"""Probability distributions and the dense linear algebra behind CI testing.

Distribution functions are thin wrappers over SciPy's special-function
evaluations (erf / incomplete beta), which meet the 1e-10 absolute accuracy
this package needs; the test suite pins that against an independent
high-precision oracle.  SPD solves and partial correlations run on the
selected kernel backend with a two-rung ridge ladder: every inversion first
adds ``1e-10 * mean(diag)`` to the diagonal, escalates once to ``1e-8``, then
gives up.
"""

from __future__ import annotations

import numpy as np
from numpy.linalg import LinAlgError
from scipy.special import betainc, ndtr, ndtri

from . import kernels
from .exceptions import InvalidInputError, SingularMatrixError

RIDGE_LADDER = (1e-10, 1e-8)

R_CLAMP = 1.0 - 1e-12


def check_cov(cov: np.ndarray) -> np.ndarray:
    """Validate a covariance matrix: square, finite, symmetric, positive diagonal."""
    cov = np.asarray(cov, dtype=np.float64)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise InvalidInputError(f"covariance must be square, got shape {cov.shape}")
    if not np.all(np.isfinite(cov)):
        raise InvalidInputError("covariance has non-finite entries")
    scale = float(np.max(np.abs(cov))) or 1.0
    if float(np.max(np.abs(cov - cov.T))) > 1e-12 * scale:
        raise InvalidInputError("covariance is not symmetric")
    if np.any(np.diag(cov) <= 0.0):
        raise InvalidInputError("covariance diagonal must be positive")
    return np.ascontiguousarray(cov)


def std_normal_cdf(x: float) -> float:
    if not np.isfinite(x):
        raise InvalidInputError("std_normal_cdf requires finite x")
    return float(ndtr(x))


def std_normal_quantile(p: float) -> float:
    if not 0.0 < p < 1.0:
        raise InvalidInputError("std_normal_quantile requires p in (0, 1)")
    return float(ndtri(p))


def f_cdf(x: float, d1: float, d2: float) -> float:
    """CDF of the F distribution with (d1, d2) degrees of freedom at x >= 0."""
    if x < 0.0 or not np.isfinite(x):
        raise InvalidInputError("f_cdf requires x >= 0")
    if d1 < 1.0 or d2 < 1.0:
        raise InvalidInputError("f_cdf requires d1, d2 >= 1")
    if x == 0.0:
        return 0.0
    return float(betainc(0.5 * d1, 0.5 * d2, d1 * x / (d1 * x + d2)))


def solve_spd(m: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve ``m x = rhs`` for SPD ``m``; small residual or SingularMatrixError."""
    m = np.ascontiguousarray(m, dtype=np.float64)
    rhs = np.ascontiguousarray(rhs, dtype=np.float64)
    if not (np.all(np.isfinite(m)) and np.all(np.isfinite(rhs))):
        raise InvalidInputError("solve_spd requires finite inputs")
    if m.ndim != 2 or m.shape[0] != m.shape[1] or rhs.shape != (m.shape[0],):
        raise InvalidInputError("solve_spd shape mismatch")
    sol = None
    for eps in RIDGE_LADDER:
        try:
            sol = kernels.solve_spd(m, rhs, eps)
            break
        except LinAlgError:
            continue
    if sol is None:
        raise SingularMatrixError("matrix not positive definite after ridge escalation")
    rhs_norm = float(np.linalg.norm(rhs))
    residual = float(np.linalg.norm(m @ sol - rhs))
    if residual > 1e-8 * max(rhs_norm, 1e-300):
        raise SingularMatrixError(
            f"solve residual {residual:.3e} exceeds 1e-8 * |rhs| = {1e-8 * rhs_norm:.3e}"
        )
    return np.asarray(sol)


def partial_correlation(cov: np.ndarray, x: int, y: int, s) -> float:
    """Partial correlation of x and y given the conditioning index set ``s``.

    Computed as ``-P[x,y] / sqrt(P[x,x] P[y,y])`` with P the inverse of the
    (x, y, *s) principal submatrix of ``cov``; the result is clamped to
    (-1, 1) by 1e-12.
    """
    cov = np.ascontiguousarray(cov, dtype=np.float64)
    dim = cov.shape[0]
    s = np.asarray(sorted(s), dtype=np.int64)
    if x == y:
        raise InvalidInputError("partial_correlation requires x != y")
    for i in (x, y, *s.tolist()):
        if not 0 <= i < dim:
            raise InvalidInputError(f"index {i} out of range [0, {dim})")
    if x in s or y in s:
        raise InvalidInputError("conditioning set must not contain x or y")
    if len(set(s.tolist())) != len(s):
        raise InvalidInputError("conditioning set has duplicate indices")
    r = None
    for eps in RIDGE_LADDER:
        try:
            r = kernels.partial_corr(cov, x, y, s, eps)
            break
        except LinAlgError:
            continue
    if r is None or not np.isfinite(r):
        raise SingularMatrixError("submatrix not positive definite after ridge escalation")
    return float(min(R_CLAMP, max(-R_CLAMP, r)))
