"""Pure-Python (NumPy/SciPy) implementations of the hot inner-loop kernels.

The compiled extension ``streampag._ckernels`` mirrors these signatures; either
backend can serve ``streampag.kernels``.  Keep the math here in lockstep with
the .pyx file.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

BACKEND = "python"


def _ridged(sub: np.ndarray, eps: float) -> np.ndarray:
    out = sub.copy()
    out[np.diag_indices_from(out)] += eps * float(np.mean(np.diag(sub)))
    return out


def partial_corr(cov: np.ndarray, x: int, y: int, s: np.ndarray, eps: float) -> float:
    """Partial correlation of (x, y) given index set ``s`` from a covariance matrix.

    Inverts the (x, y, *s) principal submatrix after adding ``eps * mean(diag)``
    to its diagonal.  Raises ``LinAlgError`` when the ridged submatrix is not
    positive definite; the caller owns the escalation policy.
    """
    idx = np.concatenate(([x, y], s)).astype(np.intp)
    sub = _ridged(cov[np.ix_(idx, idx)], eps)
    c, low = cho_factor(sub, lower=True, check_finite=False)
    rhs = np.zeros((len(idx), 2))
    rhs[0, 0] = 1.0
    rhs[1, 1] = 1.0
    inv01 = cho_solve((c, low), rhs, check_finite=False)
    p00 = inv01[0, 0]
    p11 = inv01[1, 1]
    p01 = inv01[1, 0]
    denom = np.sqrt(p00 * p11)
    if not np.isfinite(denom) or denom <= 0.0:
        raise LinAlgError("degenerate precision diagonal")
    return float(-p01 / denom)


def solve_spd(m: np.ndarray, rhs: np.ndarray, eps: float) -> np.ndarray:
    """Solve ``m x = rhs`` for symmetric positive-definite ``m`` with ridge ``eps``."""
    sub = _ridged(m, eps)
    c, low = cho_factor(sub, lower=True, check_finite=False)
    return cho_solve((c, low), rhs, check_finite=False)


def welford_update(mean: np.ndarray, scatter: np.ndarray, total_weight: float,
                   x: np.ndarray, weight: float) -> float:
    """One weighted streaming update of (mean, scatter) in place.

    Returns the new total weight.  ``scatter`` accumulates
    ``weight * outer(x - mean_old, x - mean_new)``.
    """
    new_total = total_weight + weight
    delta = x - mean
    mean += (weight / new_total) * delta
    delta2 = x - mean
    scatter += weight * np.outer(delta, delta2)
    return new_total
