"""Ground-truth generation: random linear-Gaussian SEMs with latent
confounders, regime-change datasets, and the MAG/PAG oracles used to score
learned graphs.

The MAG projection enumerates simple paths to decide inducing-path adjacency,
which is exponential in the worst case; it is intended for the small graphs
(roughly a dozen vertices) that oracle tests and scoring use.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .citest import OracleSource
from .exceptions import GenerationError, InvalidInputError
from .fci import FciOptions, fci
from .graph import Dag, Mark, MixedGraph

COEFF_LO, COEFF_HI = 0.1, 1.0

_REWIRE_RETRIES = 200
_SEM_RETRIES = 200


@dataclass
class LinearSem:
    """A DAG plus linear equations: edge coefficients, noise scales, and the
    latent-vertex subset dropped from emitted samples."""

    dag: Dag
    coeffs: dict[tuple[int, int], float]
    noise_sd: list[float]
    latent: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        edges = set(self.dag.edges())
        if set(self.coeffs) != edges:
            raise InvalidInputError("coefficients must be keyed exactly by the DAG edges")
        if len(self.noise_sd) != self.dag.n_vars or any(s <= 0 for s in self.noise_sd):
            raise InvalidInputError("noise scales must be positive, one per vertex")
        for v in self.latent:
            if self.dag.parents[v]:
                raise InvalidInputError(f"latent vertex {v} has parents")
            if len(self.dag.children[v]) < 2:
                raise InvalidInputError(f"latent vertex {v} has fewer than two children")

    @property
    def observed(self) -> list[int]:
        return [v for v in range(self.dag.n_vars) if v not in self.latent]

    @property
    def observed_names(self) -> list[str]:
        return [self.dag.var_names[v] for v in self.observed]


def _names_for(n_vars: int, latent: set[int]) -> list[str]:
    names = []
    n_obs = 0
    n_lat = 0
    for v in range(n_vars):
        if v in latent:
            n_lat += 1
            names.append(f"L{n_lat}")
        else:
            n_obs += 1
            names.append(f"X{n_obs}")
    return names


def random_sem(
    n_vars: int,
    expected_neighbors: float,
    rng: np.random.Generator,
    n_latents: int = 2,
) -> LinearSem:
    """Random linear-Gaussian SEM: ordered Erdos-Renyi DAG with edge
    probability E(N)/(n-1), coefficients uniform on [0.1, 1], unit noise.

    Latents are drawn among parentless vertices with at least two children;
    impossible draws regenerate the DAG up to a retry budget.
    """
    if n_vars < 2:
        raise InvalidInputError("need at least two variables")
    if not 0.0 <= expected_neighbors <= n_vars - 1:
        raise InvalidInputError("expected neighborhood size must lie in [0, n-1]")
    edge_prob = expected_neighbors / (n_vars - 1)
    for _ in range(_SEM_RETRIES):
        order = rng.permutation(n_vars)
        edges = []
        for i in range(n_vars):
            for j in range(i + 1, n_vars):
                if rng.random() < edge_prob:
                    edges.append((int(order[i]), int(order[j])))
        edges.sort()
        dag_plain = Dag([str(v) for v in range(n_vars)], edges)
        if n_latents > 0:
            eligible = [
                v
                for v in range(n_vars)
                if not dag_plain.parents[v] and len(dag_plain.children[v]) >= 2
            ]
            if len(eligible) < n_latents:
                continue
            chosen = rng.choice(len(eligible), size=n_latents, replace=False)
            latent = {eligible[i] for i in chosen}
        else:
            latent = set()
        dag = Dag(_names_for(n_vars, latent), edges)
        coeffs = {e: float(c) for e, c in zip(edges, rng.uniform(COEFF_LO, COEFF_HI, len(edges)))}
        return LinearSem(dag=dag, coeffs=coeffs, noise_sd=[1.0] * n_vars, latent=frozenset(latent))
    raise GenerationError(
        f"could not draw a DAG with {n_latents} parentless latents with >= 2 children "
        f"in {_SEM_RETRIES} attempts (n_vars={n_vars}, E(N)={expected_neighbors})"
    )


def sample(sem: LinearSem, n: int, rng: np.random.Generator) -> np.ndarray:
    """Simulate n rows in topological order; latent columns are dropped."""
    if n < 1:
        raise InvalidInputError("sample size must be >= 1")
    p = sem.dag.n_vars
    x = rng.standard_normal((n, p)) * np.asarray(sem.noise_sd)
    for v in sem.dag.topological_order():
        for u in sem.dag.parents[v]:
            x[:, v] += sem.coeffs[(u, v)] * x[:, u]
    return x[:, sem.observed]


def analytic_covariance(sem: LinearSem, observed_only: bool = True) -> np.ndarray:
    """Exact covariance of the SEM: (I - B')^-1 D (I - B')^-T with B[u, v]
    the u->v coefficient and D the noise variances."""
    p = sem.dag.n_vars
    b = np.zeros((p, p))
    for (u, v), c in sem.coeffs.items():
        b[u, v] = c
    m = np.linalg.inv(np.eye(p) - b.T)
    cov = m @ np.diag(np.square(sem.noise_sd)) @ m.T
    if observed_only:
        obs = sem.observed
        cov = cov[np.ix_(obs, obs)]
    return cov


@dataclass
class RegimeDatasetSpec:
    n_vars: int
    expected_neighbors: float
    n_per_regime: int
    n_regimes: int = 4
    n_latents: int = 2
    change_mode: str = "independent"
    rewire_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.n_vars < 4:
            raise InvalidInputError("need at least four variables")
        if not 0.0 <= self.expected_neighbors < self.n_vars - 1:
            raise InvalidInputError("expected neighborhood size must lie in [0, n-1)")
        if self.n_per_regime < 1 or self.n_regimes < 1:
            raise InvalidInputError("regime counts must be positive")
        if self.change_mode not in ("independent", "rewire"):
            raise InvalidInputError("change_mode must be 'independent' or 'rewire'")
        if not 0.0 <= self.rewire_fraction <= 1.0:
            raise InvalidInputError("rewire fraction must lie in [0, 1]")


def _rewire_sem(sem: LinearSem, fraction: float, rng: np.random.Generator) -> LinearSem:
    """Copy a SEM and re-randomize a fraction of its edge slots, preserving a
    topological order and the latent constraints (no parents, >= 2 children)."""
    n = sem.dag.n_vars
    order = sem.dag.topological_order()
    pos = {v: i for i, v in enumerate(order)}
    edges = sorted(sem.dag.edges())
    n_swap = int(round(fraction * len(edges)))
    if n_swap == 0:
        return LinearSem(
            dag=Dag(sem.dag.var_names, edges),
            coeffs=dict(sem.coeffs),
            noise_sd=list(sem.noise_sd),
            latent=sem.latent,
        )
    for _ in range(_REWIRE_RETRIES):
        dropped = set(rng.choice(len(edges), size=n_swap, replace=False).tolist())
        kept = [e for i, e in enumerate(edges) if i not in dropped]
        kept_set = set(kept)
        candidates = [
            (u, v)
            for u in range(n)
            for v in range(n)
            if pos[u] < pos[v] and v not in sem.latent and (u, v) not in kept_set
        ]
        if len(candidates) < n_swap:
            continue
        add_idx = rng.choice(len(candidates), size=n_swap, replace=False)
        new_edges = kept + [candidates[i] for i in add_idx]
        new_edges.sort()
        dag = Dag(sem.dag.var_names, new_edges)
        if any(dag.parents[v] or len(dag.children[v]) < 2 for v in sem.latent):
            continue
        coeffs = {}
        new_coeff_values = rng.uniform(COEFF_LO, COEFF_HI, n_swap)
        fresh = iter(new_coeff_values)
        for e in new_edges:
            coeffs[e] = sem.coeffs[e] if e in kept_set else float(next(fresh))
        return LinearSem(dag=dag, coeffs=coeffs, noise_sd=list(sem.noise_sd), latent=sem.latent)
    raise GenerationError(
        f"rewire failed to preserve latent constraints in {_REWIRE_RETRIES} attempts"
    )


def make_regime_dataset(
    spec: RegimeDatasetSpec,
) -> tuple[np.ndarray, list[int], list[LinearSem]]:
    """Concatenated samples from a sequence of SEMs over one variable schema.

    'independent' mode draws every regime fresh; 'rewire' mode perturbs the
    previous regime's DAG by re-randomizing a fraction of edge slots (0 keeps
    the model, 1 redraws it)."""
    rng = np.random.default_rng(spec.seed)
    sems = [random_sem(spec.n_vars, spec.expected_neighbors, rng, spec.n_latents)]
    for _ in range(1, spec.n_regimes):
        if spec.change_mode == "independent" or spec.rewire_fraction == 1.0:
            sems.append(random_sem(spec.n_vars, spec.expected_neighbors, rng, spec.n_latents))
        else:
            sems.append(_rewire_sem(sems[-1], spec.rewire_fraction, rng))
    blocks = [sample(sem, spec.n_per_regime, rng) for sem in sems]
    data = np.vstack(blocks)
    change_points = [spec.n_per_regime * k for k in range(1, spec.n_regimes)]
    return data, change_points, sems


def mag_projection(dag: Dag, observed, latent) -> MixedGraph:
    """Project a DAG with latents onto its maximal ancestral graph.

    Two observed vertices are adjacent iff an inducing path joins them: every
    non-endpoint observed vertex on the path is a collider, and every collider
    is an ancestor of an endpoint.  The mark at y on edge x-y is an arrowhead
    unless y is an ancestor of x.
    """
    observed = sorted(observed)
    latent = frozenset(latent)
    if set(observed) & latent:
        raise InvalidInputError("observed and latent sets must be disjoint")
    anc = {v: dag.ancestors(v) for v in range(dag.n_vars)}
    nbrs = [sorted(set(dag.parents[v]) | set(dag.children[v])) for v in range(dag.n_vars)]

    def has_inducing_path(x: int, y: int) -> bool:
        # DFS over simple paths from x; an interior vertex is validated as
        # soon as both of its incident path edges are known.
        stack = [[x]]
        while stack:
            path = stack.pop()
            head = path[-1]
            for v in nbrs[head]:
                if v in path:
                    continue
                if len(path) >= 2:
                    u = path[-2]
                    collider = head in dag.children[u] and head in dag.children[v]
                    if collider:
                        if not (head in anc[x] or head in anc[y]):
                            continue
                    elif head not in latent:
                        continue
                if v == y:
                    return True
                stack.append(path + [v])
        return False

    g = MixedGraph([dag.var_names[v] for v in observed])
    index = {v: i for i, v in enumerate(observed)}
    for i, x in enumerate(observed):
        for y in observed[i + 1 :]:
            if has_inducing_path(x, y):
                mark_at_y = Mark.TAIL if y in anc[x] else Mark.ARROW
                mark_at_x = Mark.TAIL if x in anc[y] else Mark.ARROW
                g.add_edge(index[x], index[y], mark_at_x, mark_at_y)
    return g


def true_pag(sem: LinearSem, opts: Optional[FciOptions] = None) -> MixedGraph:
    """Oracle-FCI PAG of the SEM over its observed variables."""
    src = OracleSource(dag=sem.dag, observed=sem.observed, latent=sem.latent)
    return fci(src, sem.observed_names, opts).pag


def sem_to_json(sem: LinearSem) -> dict:
    names = sem.dag.var_names
    return {
        "vertices": list(names),
        "edges": [
            {"from": names[u], "to": names[v], "coeff": sem.coeffs[(u, v)]}
            for u, v in sorted(sem.dag.edges())
        ],
        "noise_sd": {names[v]: sem.noise_sd[v] for v in range(sem.dag.n_vars)},
        "latent": [names[v] for v in sorted(sem.latent)],
    }


def sem_from_json(doc: dict) -> LinearSem:
    names = doc["vertices"]
    index = {name: i for i, name in enumerate(names)}
    edges = [(index[e["from"]], index[e["to"]]) for e in doc["edges"]]
    dag = Dag(names, edges)
    coeffs = {
        (index[e["from"]], index[e["to"]]): float(e["coeff"]) for e in doc["edges"]
    }
    noise = [float(doc["noise_sd"][name]) for name in names]
    latent = frozenset(index[name] for name in doc["latent"])
    return LinearSem(dag=dag, coeffs=coeffs, noise_sd=noise, latent=latent)


def write_dataset(
    out_dir: str | Path,
    spec: RegimeDatasetSpec,
    data: np.ndarray,
    change_points: list[int],
    sems: list[LinearSem],
) -> tuple[Path, Path]:
    """Emit data.csv (header then rows) plus the truth.json sidecar."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    var_names = sems[0].observed_names
    data_path = out / "data.csv"
    with open(data_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(var_names)
        for row in data:
            writer.writerow([repr(float(v)) for v in row])
    sidecar = {
        "spec": asdict(spec),
        "var_names": var_names,
        "change_points": change_points,
        "regimes": [
            {"sem": sem_to_json(sem), "true_pag": true_pag(sem).to_json()} for sem in sems
        ],
    }
    truth_path = out / "truth.json"
    with open(truth_path, "w") as fh:
        json.dump(sidecar, fh, indent=1)
    return data_path, truth_path
