"""The online driver: per-datapoint covariance update, change detection,
weight response, and scheduled or triggered relearning of the current PAG.

By default the Mahalanobis fit of a point is evaluated against the estimate
*before* the point is folded in, so a surprising point cannot mask itself;
``detect_after_update`` flips to the variant in which the estimate absorbs
the point first and the next point's weight carries the response.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import cmcd
from .cmcd import CmcdParams, CmcdState
from .exceptions import InsufficientDataError, InvalidInputError, SingularMatrixError
from .citest import SampleSource
from .fci import FciOptions, FciResult, fci
from .fofci import fofci
from .graph import MixedGraph, SepsetStore
from .ocme import OcmeState

ALGORITHMS = ("ofci", "fofci")


@dataclass
class PipelineConfig:
    algorithm: str = "ofci"
    fci_options: FciOptions = field(default_factory=FciOptions)
    cmcd_params: CmcdParams = field(default_factory=CmcdParams)
    emit_diagnostics: bool = True
    rng_seed: int = 0
    detect_after_update: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise InvalidInputError(f"algorithm must be one of {ALGORITHMS}")


@dataclass
class DiagnosticsRecord:
    """One per-step row of the series a change-detection plot is drawn from."""

    t: int
    mahalanobis_d2: Optional[float]
    point_p: float
    pooled_p: float
    effective_n: float
    weight: float
    relearn_flag: bool
    relearn_failed: bool = False

    CSV_HEADER = "t,mahalanobis_d2,point_p,pooled_p,effective_n,weight,relearn_flag"

    def to_csv_row(self) -> str:
        d2 = "nan" if self.mahalanobis_d2 is None else repr(self.mahalanobis_d2)
        flag = "1" if self.relearn_flag and not self.relearn_failed else "0"
        return (
            f"{self.t},{d2},{self.point_p!r},{self.pooled_p!r},"
            f"{self.effective_n!r},{self.weight!r},{flag}"
        )


class Pipeline:
    """Single-stream state: estimator, detector window, current PAG, sepsets."""

    def __init__(self, var_names: list[str], config: PipelineConfig):
        if len(set(var_names)) != len(var_names) or not var_names:
            raise InvalidInputError("variable names must be nonempty and distinct")
        self.var_names = list(var_names)
        self.config = config
        self.ocme = OcmeState(len(var_names))
        self.cmcd = CmcdState(config.cmcd_params, rng_seed=config.rng_seed)
        self.current_pag: Optional[MixedGraph] = None
        self.last_sepsets = SepsetStore()
        self.relearn_count = 0
        self.next_weight = 1.0

    def _relearn(self) -> FciResult:
        cov = self.ocme.covariance()
        src = SampleSource(cov=cov, n=self.ocme.true_count)
        if self.config.algorithm == "fofci":
            result = fofci(src, self.var_names, self.config.fci_options, self.last_sepsets)
        else:
            result = fci(src, self.var_names, self.config.fci_options)
        self.current_pag = result.pag
        self.last_sepsets = result.sepsets
        self.relearn_count += 1
        return result

    def step(self, x) -> tuple[DiagnosticsRecord, Optional[FciResult]]:
        """Process one datapoint; returns its diagnostics row and, when a
        relearn fired, the learner result."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.ocme.dim,):
            raise InvalidInputError(f"datapoint shape {x.shape} != ({self.ocme.dim},)")
        if not np.all(np.isfinite(x)):
            raise InvalidInputError("datapoint has non-finite entries")
        params = self.config.cmcd_params
        arrival_weight = self.ocme.current_weight

        if self.config.detect_after_update:
            folded_weight = self.next_weight
            self.ocme.update(x, folded_weight)
            d2 = cmcd.mahalanobis(self.ocme, x)
            point_p = cmcd.point_pvalue(d2, self.ocme.effective_n, self.ocme.dim)
            self.cmcd.push(point_p, folded_weight)
            pooled = cmcd.pool(self.cmcd)
            self.next_weight = cmcd.next_weight(pooled, folded_weight, params)
            if self.next_weight > folded_weight:
                self.cmcd.weight_increased = True
        else:
            d2 = cmcd.mahalanobis(self.ocme, x)
            point_p = cmcd.point_pvalue(d2, self.ocme.effective_n, self.ocme.dim)
            self.cmcd.push(point_p, arrival_weight)
            pooled = cmcd.pool(self.cmcd)
            folded_weight = cmcd.next_weight(pooled, arrival_weight, params)
            if folded_weight > arrival_weight:
                self.cmcd.weight_increased = True
            self.ocme.update(x, folded_weight)
            self.next_weight = folded_weight

        relearn = cmcd.should_relearn(self.cmcd, params, self.ocme.true_count)
        result = None
        failed = False
        if relearn:
            try:
                result = self._relearn()
            except (InvalidInputError, InsufficientDataError, SingularMatrixError):
                failed = True
        record = DiagnosticsRecord(
            t=self.ocme.true_count,
            mahalanobis_d2=d2,
            point_p=point_p,
            pooled_p=pooled,
            effective_n=self.ocme.effective_n,
            weight=folded_weight,
            relearn_flag=relearn,
            relearn_failed=failed,
        )
        return record, result

    def to_json(self) -> dict:
        return {
            "var_names": self.var_names,
            "ocme": self.ocme.to_json(),
            "cmcd": self.cmcd.to_json(),
            "sepsets": self.last_sepsets.to_json(self.var_names),
            "pag": None if self.current_pag is None else self.current_pag.to_json(),
            "relearn_count": self.relearn_count,
            "next_weight": self.next_weight,
        }

    @classmethod
    def from_json(cls, doc: dict, config: PipelineConfig) -> "Pipeline":
        pipe = cls(doc["var_names"], config)
        pipe.ocme = OcmeState.from_json(doc["ocme"])
        pipe.cmcd = CmcdState.from_json(doc["cmcd"], config.cmcd_params)
        pipe.last_sepsets = SepsetStore.from_json(doc["sepsets"], pipe.var_names)
        pipe.current_pag = (
            None if doc["pag"] is None else MixedGraph.from_json(doc["pag"])
        )
        pipe.relearn_count = int(doc["relearn_count"])
        pipe.next_weight = float(doc["next_weight"])
        return pipe


def run_stream(
    data: Iterable, var_names: list[str], config: PipelineConfig
) -> tuple[Pipeline, list[DiagnosticsRecord], list[FciResult]]:
    """Fold ``step`` over a stream of fixed-dimension rows; deterministic
    given the config seed."""
    pipe = Pipeline(var_names, config)
    diagnostics: list[DiagnosticsRecord] = []
    results: list[FciResult] = []
    for row in data:
        record, result = pipe.step(row)
        if config.emit_diagnostics:
            diagnostics.append(record)
        if result is not None:
            results.append(result)
    return pipe, diagnostics, results
