"""Change detection for the streaming estimator.

Each incoming point's fit against the pre-change covariance estimate is a
Mahalanobis distance, converted to a pointwise p-value through the
new-observation Hotelling T-squared / F transform, pooled over a sliding
window by Liptak's weighted normal-quantile method, and finally mapped to the
next datapoint's weight and a (probabilistic or scheduled) relearn decision.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import numerics
from .exceptions import InsufficientDataError, InvalidInputError, SingularMatrixError
from .ocme import OcmeState

P_CLAMP_LO = 1e-12
P_CLAMP_HI = 1.0 - 1e-12

NEUTRAL_P = 0.5


@dataclass
class CmcdParams:
    window: int = 20
    pool_threshold: float = 0.01
    weight_gain: float = 2.0
    scheduler_floor: float = 0.0
    scheduler_exponent: float = 3.0
    fixed_schedule: Optional[list[int]] = None

    def __post_init__(self):
        if self.window < 1:
            raise InvalidInputError("window must be >= 1")
        if not 0.0 < self.pool_threshold < 1.0:
            raise InvalidInputError("pool_threshold must lie in (0, 1)")
        if self.weight_gain <= 0.0:
            raise InvalidInputError("weight_gain must be > 0")
        if not 0.0 <= self.scheduler_floor <= 1.0:
            raise InvalidInputError("scheduler_floor must lie in [0, 1]")
        if self.scheduler_exponent < 1.0:
            raise InvalidInputError("scheduler_exponent must be >= 1")


class CmcdState:
    """Rolling evidence window plus the scheduler's RNG."""

    def __init__(self, params: CmcdParams, rng_seed: int = 0):
        self.params = params
        self.buffer: deque[tuple[float, float]] = deque(maxlen=params.window)
        self.last_pooled_p = 1.0
        self.weight_increased = False
        self.rng = np.random.default_rng(rng_seed)

    def push(self, p_value: float, weight: float) -> None:
        if not 0.0 <= p_value <= 1.0:
            raise InvalidInputError("p-value outside [0, 1]")
        self.buffer.append((float(p_value), float(weight)))

    def to_json(self) -> dict:
        return {
            "buffer": [list(entry) for entry in self.buffer],
            "last_pooled_p": self.last_pooled_p,
            "weight_increased": self.weight_increased,
            "rng_state": self.rng.bit_generator.state,
        }

    @classmethod
    def from_json(cls, doc: dict, params: CmcdParams) -> "CmcdState":
        state = cls(params)
        state.buffer = deque(
            (tuple(entry) for entry in doc["buffer"]), maxlen=params.window
        )
        state.last_pooled_p = float(doc["last_pooled_p"])
        state.weight_increased = bool(doc["weight_increased"])
        state.rng.bit_generator.state = doc["rng_state"]
        return state


def mahalanobis(ocme: OcmeState, x) -> Optional[float]:
    """Squared Mahalanobis distance of ``x`` from the current estimate.

    Returns None (non-informative) during burn-in (effective n below dim + 2)
    or when the covariance is numerically singular.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (ocme.dim,):
        raise InvalidInputError(f"datapoint shape {x.shape} != ({ocme.dim},)")
    if ocme.effective_n < ocme.dim + 2:
        return None
    try:
        cov = ocme.covariance()
        delta = x - ocme.mean
        d2 = float(delta @ numerics.solve_spd(cov, delta))
    except (InsufficientDataError, SingularMatrixError):
        return None
    if not np.isfinite(d2):
        return None
    return max(0.0, d2)


def point_pvalue(d2: Optional[float], n_eff: float, dim: int) -> float:
    """Pointwise p-value of a squared distance under the Hotelling T2 null.

    Uses the new-observation F transform at effective sample size ``n_eff``;
    non-informative inputs (burn-in, singularity) map to the neutral 0.5.
    """
    if d2 is None or n_eff <= dim + 1:
        return NEUTRAL_P
    stat = d2 * n_eff * (n_eff - dim) / (dim * (n_eff + 1.0) * (n_eff - 1.0))
    return 1.0 - numerics.f_cdf(stat, dim, n_eff - dim)


def pool(state: CmcdState) -> float:
    """Liptak-pooled p-value of the current window (weighted Stouffer)."""
    if not state.buffer:
        raise InvalidInputError("pool requires a nonempty window")
    z_sum = 0.0
    w_sq = 0.0
    for p, w in state.buffer:
        p = min(P_CLAMP_HI, max(P_CLAMP_LO, p))
        z_sum += w * numerics.std_normal_quantile(1.0 - p)
        w_sq += w * w
    pooled_z = z_sum / np.sqrt(w_sq)
    pooled_p = 1.0 - numerics.std_normal_cdf(pooled_z)
    state.last_pooled_p = pooled_p
    return pooled_p


def next_weight(pooled_p: float, current_a: float, params: CmcdParams) -> float:
    """Weight for the incoming point: unchanged above the threshold, scaled
    up linearly in the threshold shortfall below it."""
    if current_a <= 0.0:
        raise InvalidInputError("current weight must be positive")
    gamma = params.pool_threshold
    shortfall = max(0.0, (gamma - pooled_p) / gamma)
    return current_a * (1.0 + params.weight_gain * shortfall)


def should_relearn(state: CmcdState, params: CmcdParams, true_count: int) -> bool:
    """Relearn decision for the step that just folded datapoint ``true_count``.

    With a fixed schedule, fires exactly at the scheduled counts.  Otherwise
    fires probabilistically with rate r_min + (1 - r_min) (1 - pooled_p)^kappa
    once the pooled p-value crosses the threshold, and always on a step whose
    weight just increased.
    """
    if params.fixed_schedule is not None:
        return true_count in params.fixed_schedule
    u = float(state.rng.random())
    rate = params.scheduler_floor
    if state.last_pooled_p < params.pool_threshold:
        rate += (1.0 - params.scheduler_floor) * (
            (1.0 - state.last_pooled_p) ** params.scheduler_exponent
        )
    fire = u < rate
    if state.weight_increased:
        fire = True
        state.weight_increased = False
    return fire
