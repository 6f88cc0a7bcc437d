"""Streaming causal structure learning in the presence of latent confounders.

Maintains a weighted online covariance estimate over a multivariate Gaussian
stream, detects distributional change through pooled Mahalanobis p-values, and
(re)learns partial ancestral graphs with FCI, its online wrapper, and the
sepset-reusing fast variant.
"""

__version__ = "0.1.0"

from .bench import BenchConfig, BenchRecord, StructuralDiff, run_benchmark, structural_diff
from .citest import CiDecision, OracleSource, SampleSource, ci_test, d_separated
from .cmcd import CmcdParams, CmcdState, mahalanobis, next_weight, point_pvalue, pool, should_relearn
from .exceptions import (
    GenerationError,
    InsufficientDataError,
    InvalidInputError,
    SingularMatrixError,
)
from .fci import FciOptions, FciResult, fci
from .fofci import fofci, seeded_skeleton_init
from .graph import Dag, Mark, MixedGraph, SepsetStore, new_complete
from .kernels import backend_name
from .ocme import OcmeState
from .pipeline import DiagnosticsRecord, Pipeline, PipelineConfig, run_stream
from .simgen import (
    LinearSem,
    RegimeDatasetSpec,
    analytic_covariance,
    mag_projection,
    make_regime_dataset,
    random_sem,
    sample,
    true_pag,
)

__all__ = [
    "BenchConfig",
    "BenchRecord",
    "CiDecision",
    "CmcdParams",
    "CmcdState",
    "Dag",
    "DiagnosticsRecord",
    "FciOptions",
    "FciResult",
    "GenerationError",
    "InsufficientDataError",
    "InvalidInputError",
    "LinearSem",
    "Mark",
    "MixedGraph",
    "OcmeState",
    "OracleSource",
    "Pipeline",
    "PipelineConfig",
    "RegimeDatasetSpec",
    "SampleSource",
    "SepsetStore",
    "SingularMatrixError",
    "StructuralDiff",
    "analytic_covariance",
    "backend_name",
    "ci_test",
    "d_separated",
    "fci",
    "fofci",
    "mag_projection",
    "mahalanobis",
    "make_regime_dataset",
    "new_complete",
    "next_weight",
    "point_pvalue",
    "pool",
    "random_sem",
    "run_benchmark",
    "run_stream",
    "sample",
    "seeded_skeleton_init",
    "should_relearn",
    "structural_diff",
    "true_pag",
]
