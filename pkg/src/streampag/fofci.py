"""Fast online FCI: the skeleton phase is seeded by replaying the previous
model's separating sets, so re-finding still-valid independences costs one
test per remembered pair instead of a fresh subset search.
"""

from __future__ import annotations

import time
from typing import Optional

from .citest import CiSource, ci_test
from .exceptions import InvalidInputError
from .fci import (
    FciOptions,
    FciResult,
    apply_orientation_rules,
    orient_v_structures,
    pdsep_prune,
    skeleton_search,
)
from .graph import MixedGraph, SepsetStore, new_complete


def seeded_skeleton_init(
    src: CiSource, var_names: list[str], prev: SepsetStore, opts: FciOptions
) -> tuple[MixedGraph, SepsetStore]:
    """Start from the complete graph and retest each remembered pair once
    against its old separating set; re-verified pairs lose their edge and
    carry the set over, failed pairs fall through to the ordinary search."""
    g = new_complete(var_names)
    store = SepsetStore()
    n = g.n_vars
    for x, y in prev.pairs():
        s = prev.lookup(x, y)
        for i in (x, y, *s):
            if not 0 <= i < n:
                raise InvalidInputError(
                    f"previous sepset store references index {i}, valid range [0, {n})"
                )
        dec = ci_test(src, x, y, sorted(s), opts.alpha)
        if dec.independent:
            g.remove_edge(x, y)
            store.record(x, y, s)
    return g, store


def fofci(
    src: CiSource,
    var_names: list[str],
    opts: Optional[FciOptions] = None,
    prev: Optional[SepsetStore] = None,
) -> FciResult:
    """FCI with sepset-seeded skeleton initialization.

    With an empty ``prev`` this is exactly ``fci``; with a stale store it
    degrades to the ordinary search pair by pair.
    """
    opts = opts or FciOptions()
    prev = prev if prev is not None else SepsetStore()
    if len(var_names) != src.n_vars:
        raise InvalidInputError(
            f"{len(var_names)} variable names for a {src.n_vars}-variable CI source"
        )
    t0 = time.perf_counter()
    start_tests = src.tests_used
    g, sepsets = seeded_skeleton_init(src, var_names, prev, opts)
    skeleton_search(src, g, sepsets, opts)
    orient_v_structures(g, sepsets)
    pdsep_prune(src, g, sepsets, opts)
    g, conflicts = apply_orientation_rules(g, sepsets)
    return FciResult(
        pag=g,
        sepsets=sepsets,
        tests_used=src.tests_used - start_tests,
        elapsed=time.perf_counter() - t0,
        conflicts=conflicts,
    )
