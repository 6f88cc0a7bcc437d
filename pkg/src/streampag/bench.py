"""Scoring and the benchmark harness: structural differences against the true
PAG, CI-test counts, and wall time per algorithm and checkpoint.

Wall times are reported for trend comparisons only; nothing here asserts
absolute seconds.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .citest import SampleSource
from .cmcd import CmcdParams
from .exceptions import InvalidInputError
from .fci import FciOptions, fci
from .graph import MixedGraph
from .pipeline import PipelineConfig, run_stream
from .simgen import RegimeDatasetSpec, make_regime_dataset, true_pag

logger = logging.getLogger(__name__)

CSV_HEADER = "algorithm,p_vars,n,seed,checkpoint,missing,extra,mark_mismatch,ci_tests,elapsed_ms"


@dataclass
class StructuralDiff:
    missing_edges: int
    extra_edges: int
    mark_mismatches: int

    @property
    def edge_errors(self) -> int:
        return self.missing_edges + self.extra_edges


@dataclass
class BenchRecord:
    algorithm: str
    p_vars: int
    n: int
    seed: int
    checkpoint: int
    diff: StructuralDiff
    ci_tests: int
    elapsed_ms: float

    def to_csv_row(self) -> str:
        return (
            f"{self.algorithm},{self.p_vars},{self.n},{self.seed},{self.checkpoint},"
            f"{self.diff.missing_edges},{self.diff.extra_edges},{self.diff.mark_mismatches},"
            f"{self.ci_tests},{self.elapsed_ms:.3f}"
        )


def structural_diff(learned: MixedGraph, truth: MixedGraph) -> StructuralDiff:
    """Edges of the truth missing from the learner, learner edges absent from
    the truth, and per-endpoint mark disagreements over shared edges."""
    if learned.var_names != truth.var_names:
        raise InvalidInputError("graphs must share one variable schema")
    learned_edges = set(learned.edges())
    truth_edges = set(truth.edges())
    missing = len(truth_edges - learned_edges)
    extra = len(learned_edges - truth_edges)
    mismatches = 0
    for a, b in learned_edges & truth_edges:
        if learned.mark(a, b) != truth.mark(a, b):
            mismatches += 1
        if learned.mark(b, a) != truth.mark(b, a):
            mismatches += 1
    return StructuralDiff(missing, extra, mismatches)


@dataclass
class BenchConfig:
    algorithms: tuple[str, ...] = ("fci", "ofci", "fofci")
    fci_options: FciOptions = field(default_factory=FciOptions)
    cmcd_params: CmcdParams = field(default_factory=CmcdParams)
    workers: int = 1


def _batch_cov(data: np.ndarray) -> np.ndarray:
    mean = data.mean(axis=0)
    centered = data - mean
    return (centered.T @ centered) / data.shape[0]


def _active_truths(spec: RegimeDatasetSpec, sems) -> dict[int, MixedGraph]:
    """Truth PAG per checkpoint: the regime whose block just completed."""
    out = {}
    for k in range(1, spec.n_regimes + 1):
        out[k * spec.n_per_regime] = true_pag(sems[k - 1])
    return out


def _run_cell(
    spec: RegimeDatasetSpec, algorithm: str, config: BenchConfig
) -> list[BenchRecord]:
    data, _, sems = make_regime_dataset(spec)
    truths = _active_truths(spec, sems)
    checkpoints = sorted(truths)
    records = []
    if algorithm == "fci":
        for cp in checkpoints:
            t0 = time.perf_counter()
            src = SampleSource(cov=_batch_cov(data[:cp]), n=cp)
            result = fci(src, sems[0].observed_names, config.fci_options)
            elapsed_ms = (time.perf_counter() - t0) * 1e3
            records.append(
                BenchRecord(
                    algorithm="fci",
                    p_vars=spec.n_vars,
                    n=cp,
                    seed=spec.seed,
                    checkpoint=cp,
                    diff=structural_diff(result.pag, truths[cp]),
                    ci_tests=result.tests_used,
                    elapsed_ms=elapsed_ms,
                )
            )
        return records

    params = CmcdParams(
        window=config.cmcd_params.window,
        pool_threshold=config.cmcd_params.pool_threshold,
        weight_gain=config.cmcd_params.weight_gain,
        scheduler_floor=config.cmcd_params.scheduler_floor,
        scheduler_exponent=config.cmcd_params.scheduler_exponent,
        fixed_schedule=checkpoints,
    )
    pipe_config = PipelineConfig(
        algorithm=algorithm,
        fci_options=config.fci_options,
        cmcd_params=params,
        emit_diagnostics=False,
        rng_seed=spec.seed,
    )
    pipe, _, results = run_stream(data, sems[0].observed_names, pipe_config)
    if len(results) != len(checkpoints):
        raise RuntimeError(
            f"expected {len(checkpoints)} relearns, got {len(results)}"
        )
    for cp, result in zip(checkpoints, results):
        records.append(
            BenchRecord(
                algorithm=algorithm,
                p_vars=spec.n_vars,
                n=cp,
                seed=spec.seed,
                checkpoint=cp,
                diff=structural_diff(result.pag, truths[cp]),
                ci_tests=result.tests_used,
                elapsed_ms=result.elapsed * 1e3,
            )
        )
    return records


def run_benchmark(
    grid: list[RegimeDatasetSpec], config: Optional[BenchConfig] = None
) -> list[BenchRecord]:
    """Score every (dataset spec, algorithm) cell at each change point and the
    stream end.  Cell failures are logged and skipped; the harness continues."""
    config = config or BenchConfig()
    cells = [(spec, algo) for spec in grid for algo in config.algorithms]
    records: list[BenchRecord] = []
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(_run_cell, spec, algo, config) for spec, algo in cells]
            for (spec, algo), fut in zip(cells, futures):
                try:
                    records.extend(fut.result())
                except Exception:
                    logger.exception("benchmark cell failed: %s seed=%s %s", spec, spec.seed, algo)
    else:
        for spec, algo in cells:
            try:
                records.extend(_run_cell(spec, algo, config))
            except Exception:
                logger.exception("benchmark cell failed: %s seed=%s %s", spec, spec.seed, algo)
    return records


def write_bench_csv(records: list[BenchRecord], path: str | Path) -> None:
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for rec in records:
            fh.write(rec.to_csv_row() + "\n")
