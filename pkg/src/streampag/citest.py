"""Conditional-independence decisions from a covariance matrix or a ground-truth DAG.

A sample source runs the Fisher-z partial-correlation test; an oracle source
answers d-separation queries on the generating DAG (latent variables are
marginalized simply by never appearing in queries).  Both keep a monotone
counter of executed tests, which is the quantity the benchmark harness
compares across learners.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import numerics
from .exceptions import InvalidInputError, SingularMatrixError
from .graph import Dag


@dataclass
class CiDecision:
    independent: bool
    p_value: float
    tests_used: int = 1
    informative: bool = True


@dataclass
class SampleSource:
    """Gaussian CI information: a covariance matrix and the sample count behind it."""

    cov: np.ndarray
    n: int
    tests_used: int = 0

    def __post_init__(self):
        self.cov = numerics.check_cov(self.cov)
        if self.n < 1:
            raise InvalidInputError("sample count must be >= 1")

    @property
    def n_vars(self) -> int:
        return self.cov.shape[0]


@dataclass
class OracleSource:
    """D-separation oracle over a DAG with a designated observed subset."""

    dag: Dag
    observed: list[int]
    latent: frozenset[int] = field(default_factory=frozenset)
    tests_used: int = 0

    def __post_init__(self):
        obs = set(self.observed)
        if len(obs) != len(self.observed):
            raise InvalidInputError("observed indices must be distinct")
        if obs & set(self.latent):
            raise InvalidInputError("observed and latent sets must be disjoint")
        if obs | set(self.latent) != set(range(self.dag.n_vars)):
            raise InvalidInputError("observed + latent must cover all DAG vertices")

    @property
    def n_vars(self) -> int:
        return len(self.observed)


CiSource = Union[SampleSource, OracleSource]


def d_separated(dag: Dag, x: int, y: int, s) -> bool:
    """Whether x and y are d-separated given ``s`` in ``dag``.

    Linear-time reachability over (vertex, approach-direction) states: a path
    is active when every non-collider on it avoids ``s`` and every collider is
    in ``s`` or has a descendant in ``s``.
    """
    s = frozenset(s)
    if x == y:
        raise InvalidInputError("d-separation query requires x != y")
    if x in s or y in s:
        raise InvalidInputError("conditioning set must not contain x or y")
    # vertices whose descendants reach s (i.e. ancestors of s, including s)
    anc_s = set(s)
    stack = list(s)
    while stack:
        v = stack.pop()
        for p in dag.parents[v]:
            if p not in anc_s:
                anc_s.add(p)
                stack.append(p)
    UP, DOWN = 0, 1  # entered from a child / from a parent
    seen = {(x, UP)}
    stack = [(x, UP)]
    while stack:
        v, direction = stack.pop()
        if v == y:
            return False
        nxt = []
        if direction == UP and v not in s:
            nxt.extend((p, UP) for p in dag.parents[v])
            nxt.extend((c, DOWN) for c in dag.children[v])
        elif direction == DOWN:
            if v not in s:
                nxt.extend((c, DOWN) for c in dag.children[v])
            if v in anc_s:
                nxt.extend((p, UP) for p in dag.parents[v])
        for state in nxt:
            if state not in seen:
                seen.add(state)
                stack.append(state)
    return True


def _fisher_z_pvalue(r: float, n: int, cond_size: int) -> float:
    dof = n - cond_size - 3
    z = 0.5 * math.log((1.0 + r) / (1.0 - r)) * math.sqrt(dof)
    return 2.0 * (1.0 - numerics.std_normal_cdf(abs(z)))


def ci_test(src: CiSource, x: int, y: int, s, alpha: float) -> CiDecision:
    """Decide x independent-of y given ``s`` at level ``alpha``.

    Sample mode uses the Fisher-z transform of the partial correlation and the
    caller-supplied (actual) sample count.  Degenerate tests (too few samples
    for the conditioning size) are skipped and reported dependent; singular
    covariance submatrices are executed-but-non-informative, also dependent.
    """
    s = sorted(s)
    if x == y:
        raise InvalidInputError("ci_test requires x != y")
    if x in s or y in s:
        raise InvalidInputError("conditioning set must not contain x or y")
    for i in (x, y, *s):
        if not 0 <= i < src.n_vars:
            raise InvalidInputError(f"index {i} out of range [0, {src.n_vars})")

    if isinstance(src, OracleSource):
        obs = src.observed
        src.tests_used += 1
        indep = d_separated(src.dag, obs[x], obs[y], [obs[i] for i in s])
        return CiDecision(independent=indep, p_value=1.0)

    if src.n - len(s) - 3 < 1:
        return CiDecision(independent=False, p_value=0.0, tests_used=0, informative=False)
    src.tests_used += 1
    try:
        r = numerics.partial_correlation(src.cov, x, y, s)
    except SingularMatrixError:
        return CiDecision(independent=False, p_value=0.0, informative=False)
    p = _fisher_z_pvalue(r, src.n, len(s))
    return CiDecision(independent=p > alpha, p_value=p)
