"""Online covariance matrix estimation over a weighted data stream.

State is O(p^2) regardless of stream length: a weighted mean, a weighted
scatter matrix of deviations, the total weight, and two sample-size notions.
``true_count`` counts datapoints; ``effective_n`` shrinks whenever newer
points are weighted above older ones, deflating confidence in the old data
proportionally to the relative weight.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .exceptions import InsufficientDataError, InvalidInputError


class OcmeState:
    def __init__(self, dim: int):
        if dim < 1:
            raise InvalidInputError("dimension must be >= 1")
        self.dim = dim
        self.mean = np.zeros(dim)
        self.scatter = np.zeros((dim, dim))
        self.total_weight = 0.0
        self.effective_n = 0.0
        self.true_count = 0
        self.current_weight = 1.0

    def update(self, x, weight: float | None = None) -> "OcmeState":
        """Fold one datapoint in with the given weight (default: current weight).

        Weights may never decrease between consecutive points.  A bad point
        (wrong shape, non-finite, shrinking weight) is rejected with the state
        unchanged.
        """
        a = self.current_weight if weight is None else float(weight)
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise InvalidInputError(f"datapoint shape {x.shape} != ({self.dim},)")
        if not np.all(np.isfinite(x)):
            raise InvalidInputError("datapoint has non-finite entries")
        if a < self.current_weight:
            raise InvalidInputError(
                f"weight {a} below current weight {self.current_weight}; weights may not decrease"
            )
        x = np.ascontiguousarray(x)
        self.total_weight = kernels.welford_update(
            self.mean, self.scatter, self.total_weight, x, a
        )
        self.effective_n = self.effective_n * (self.current_weight / a) + 1.0
        self.true_count += 1
        self.current_weight = a
        return self

    def covariance(self) -> np.ndarray:
        """Current weighted covariance estimate (MLE normalization, symmetrized)."""
        if self.effective_n < 2.0:
            raise InsufficientDataError(
                f"effective sample size {self.effective_n:.3g} < 2"
            )
        cov = self.scatter / self.total_weight
        return 0.5 * (cov + cov.T)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "mean": self.mean.tolist(),
            "scatter": self.scatter.tolist(),
            "total_weight": self.total_weight,
            "effective_n": self.effective_n,
            "true_count": self.true_count,
            "current_weight": self.current_weight,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "OcmeState":
        state = cls(doc["dim"])
        state.mean = np.array(doc["mean"], dtype=np.float64)
        state.scatter = np.array(doc["scatter"], dtype=np.float64)
        state.total_weight = float(doc["total_weight"])
        state.effective_n = float(doc["effective_n"])
        state.true_count = int(doc["true_count"])
        state.current_weight = float(doc["current_weight"])
        return state
