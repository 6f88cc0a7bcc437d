"""Constraint-based learning of partial ancestral graphs in the presence of
latent confounders: level-wise skeleton search, unshielded-triple (collider)
orientation, Possible-D-SEP pruning, and the complete arrowhead/tail rule set
R1-R4, R8-R10 (selection-variable rules are out of scope).

All scans run in ascending-index lexicographic order, so identical inputs and
options yield bit-identical output.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

from .citest import CiSource, ci_test
from .exceptions import InvalidInputError
from .graph import Mark, MixedGraph, SepsetStore, new_complete

logger = logging.getLogger(__name__)


@dataclass
class FciOptions:
    alpha: float = 0.05
    max_cond_size: Optional[int] = None
    pdsep_enabled: bool = True
    max_pdsep_size: Optional[int] = None
    stable: bool = False

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InvalidInputError("alpha must lie in (0, 1)")


@dataclass
class FciResult:
    pag: MixedGraph
    sepsets: SepsetStore
    tests_used: int
    elapsed: float
    conflicts: int = 0


def skeleton_search(
    src: CiSource, g: MixedGraph, sepsets: SepsetStore, opts: FciOptions
) -> tuple[MixedGraph, SepsetStore]:
    """PC-style edge removal on ``g`` (any supergraph of the target skeleton).

    Level l tests every ordered adjacent pair (x, y) against the size-l
    subsets of adj(x) \\ {y}; an independent verdict deletes the edge and
    records the separating set.  Edges are only ever removed.
    """
    n = g.n_vars
    level = 0
    max_level = n - 2 if opts.max_cond_size is None else opts.max_cond_size
    while level <= max_level:
        snapshot = [g.neighbors(v) for v in range(n)] if opts.stable else None
        for x in range(n):
            for y in range(n):
                if y == x or not g.adjacent(x, y):
                    continue
                pool = snapshot[x] if opts.stable else g.neighbors(x)
                pool = [v for v in pool if v != y]
                if len(pool) < level:
                    continue
                for s in combinations(pool, level):
                    dec = ci_test(src, x, y, s, opts.alpha)
                    if dec.independent:
                        g.remove_edge(x, y)
                        sepsets.record(x, y, s)
                        break
        level += 1
        if not any(g.degree(v) - 1 >= level for v in range(n) if g.degree(v) > 0):
            break
    return g, sepsets


def orient_v_structures(g: MixedGraph, sepsets: SepsetStore) -> MixedGraph:
    """Arrowheads at b for every unshielded <a, b, c> whose recorded sepset
    excludes b (pairs with no recorded sepset count as separated by the
    empty set)."""
    for a, b, c in g.unshielded_triples():
        s = sepsets.lookup(a, c) or frozenset()
        if b not in s:
            g.set_mark(a, b, Mark.ARROW)
            g.set_mark(c, b, Mark.ARROW)
    return g


def possible_dsep(g: MixedGraph, x: int) -> set[int]:
    """Vertices reachable from x along paths whose every consecutive triple
    <u, w, z> is a collider at w or has u, z adjacent (a triangle)."""
    reachable: set[int] = set()
    seen: set[tuple[int, int]] = set()
    stack: list[tuple[int, int]] = []
    for nb in g.neighbors(x):
        seen.add((x, nb))
        stack.append((x, nb))
        reachable.add(nb)
    while stack:
        u, w = stack.pop()
        for z in g.neighbors(w):
            if z == u or z == x or (w, z) in seen:
                continue
            collider = g.mark(u, w) == Mark.ARROW and g.mark(z, w) == Mark.ARROW
            if collider or g.adjacent(u, z):
                seen.add((w, z))
                stack.append((w, z))
                reachable.add(z)
    return reachable


def pdsep_prune(
    src: CiSource, g: MixedGraph, sepsets: SepsetStore, opts: FciOptions
) -> tuple[MixedGraph, SepsetStore]:
    """Latent-aware second pruning pass over Possible-D-SEP conditioning pools.

    Runs after v-structure orientation.  Afterwards every mark is reset to a
    circle and the v-structures are re-oriented from the updated sepsets.
    """
    if not opts.pdsep_enabled:
        return g, sepsets
    n = g.n_vars
    for x in range(n):
        for y in range(x + 1, n):
            if not g.adjacent(x, y):
                continue
            pool = sorted((possible_dsep(g, x) | possible_dsep(g, y)) - {x, y})
            max_size = len(pool)
            if opts.max_pdsep_size is not None:
                max_size = min(max_size, opts.max_pdsep_size)
            removed = False
            for size in range(max_size + 1):
                for s in combinations(pool, size):
                    dec = ci_test(src, x, y, s, opts.alpha)
                    if dec.independent:
                        g.remove_edge(x, y)
                        sepsets.record(x, y, s)
                        removed = True
                        break
                if removed:
                    break
    for a, b in g.edges():
        g.set_mark(a, b, Mark.CIRCLE)
        g.set_mark(b, a, Mark.CIRCLE)
    orient_v_structures(g, sepsets)
    return g, sepsets


class _RuleEngine:
    """Fixpoint application of the orientation rules.

    Rules only ever replace circle marks; writing a conflicting hard mark is
    logged and ignored (first writer wins).
    """

    def __init__(self, g: MixedGraph, sepsets: SepsetStore):
        self.g = g
        self.sepsets = sepsets
        self.conflicts = 0

    def _orient(self, a: int, b: int, m: Mark) -> bool:
        """Set the mark at b on edge a-b if it is currently a circle."""
        cur = self.g.mark(a, b)
        if cur == m:
            return False
        if cur != Mark.CIRCLE:
            self.conflicts += 1
            logger.debug(
                "orientation conflict on edge %d-%d at %d: %s kept over %s",
                a, b, b, cur.name, m.name,
            )
            return False
        self.g.set_mark(a, b, m)
        return True

    def _is_directed(self, a: int, b: int) -> bool:
        """a -> b: tail at a, arrow at b."""
        return (
            self.g.adjacent(a, b)
            and self.g.mark(b, a) == Mark.TAIL
            and self.g.mark(a, b) == Mark.ARROW
        )

    def run(self) -> None:
        changed = True
        while changed:
            changed = False
            for rule in (
                self._rule1,
                self._rule2,
                self._rule3,
                self._rule4,
                self._rule8,
                self._rule9,
                self._rule10,
            ):
                changed |= rule()

    def _rule1(self) -> bool:
        # a *-> b o-* c with a, c nonadjacent: orient b -> c.
        g = self.g
        changed = False
        for b in range(g.n_vars):
            for a in g.neighbors(b):
                if g.mark(a, b) != Mark.ARROW:
                    continue
                for c in g.neighbors(b):
                    if c == a or g.adjacent(a, c):
                        continue
                    if g.mark(c, b) == Mark.CIRCLE:
                        changed |= self._orient(c, b, Mark.TAIL)
                        changed |= self._orient(b, c, Mark.ARROW)
        return changed

    def _rule2(self) -> bool:
        # (a -> b *-> c) or (a *-> b -> c), with a circle at c on edge a-c:
        # orient the a-c mark at c into an arrowhead.
        g = self.g
        changed = False
        for a in range(g.n_vars):
            for b in g.neighbors(a):
                for c in g.neighbors(b):
                    if c == a or not g.adjacent(a, c):
                        continue
                    if g.mark(a, c) != Mark.CIRCLE:
                        continue
                    chain1 = self._is_directed(a, b) and g.mark(b, c) == Mark.ARROW
                    chain2 = g.mark(a, b) == Mark.ARROW and self._is_directed(b, c)
                    if chain1 or chain2:
                        changed |= self._orient(a, c, Mark.ARROW)
        return changed

    def _rule3(self) -> bool:
        # a *-> b <-* c, a *-o d o-* c, a, c nonadjacent, d *-o b: orient d *-> b.
        g = self.g
        changed = False
        for b in range(g.n_vars):
            nbrs_b = g.neighbors(b)
            for a, c in combinations(nbrs_b, 2):
                if g.adjacent(a, c):
                    continue
                if g.mark(a, b) != Mark.ARROW or g.mark(c, b) != Mark.ARROW:
                    continue
                for d in g.neighbors(b):
                    if d in (a, c):
                        continue
                    if not (g.adjacent(a, d) and g.adjacent(c, d)):
                        continue
                    if g.mark(a, d) != Mark.CIRCLE or g.mark(c, d) != Mark.CIRCLE:
                        continue
                    if g.mark(d, b) == Mark.CIRCLE:
                        changed |= self._orient(d, b, Mark.ARROW)
        return changed

    def _find_discriminating_theta(self, b: int, c: int) -> Optional[tuple[int, int]]:
        """First (theta, a) of a discriminating path <theta, ..., a, b, c> for b.

        Every vertex strictly between theta and b must be a collider on the
        path and a parent of c; theta must be nonadjacent to c.  Depth-first
        extension away from b, ascending candidate order.
        """
        g = self.g

        def parent_of_c(v: int) -> bool:
            return (
                g.adjacent(v, c)
                and g.mark(c, v) == Mark.TAIL
                and g.mark(v, c) == Mark.ARROW
            )

        first = [
            a
            for a in g.neighbors(b)
            if a != c and g.mark(b, a) == Mark.ARROW and parent_of_c(a)
        ]
        # path stored outward from b: [a, v1, ..., head]
        stack: list[list[int]] = [[a] for a in reversed(first)]
        while stack:
            path = stack.pop()
            head = path[-1]
            extensions = []
            for w in sorted(g.neighbors(head)):
                if w == b or w == c or w in path:
                    continue
                if g.mark(w, head) != Mark.ARROW:
                    continue  # head needs an arrowhead on its far side
                if not g.adjacent(w, c):
                    return w, path[0]
                if parent_of_c(w) and g.mark(head, w) == Mark.ARROW:
                    extensions.append(path + [w])
            stack.extend(reversed(extensions))
        return None

    def _rule4(self) -> bool:
        # Discriminating path <theta, ..., a, b, c> with a circle at b on b-c:
        # orient b -> c when b separated theta from c, else a <-> b <-> c.
        g = self.g
        changed = False
        for b in range(g.n_vars):
            for c in g.neighbors(b):
                if g.mark(c, b) != Mark.CIRCLE:
                    continue
                found = self._find_discriminating_theta(b, c)
                if found is None:
                    continue
                theta, a = found
                s = self.sepsets.lookup(theta, c) or frozenset()
                if b in s:
                    changed |= self._orient(c, b, Mark.TAIL)
                    changed |= self._orient(b, c, Mark.ARROW)
                else:
                    changed |= self._orient(b, a, Mark.ARROW)
                    changed |= self._orient(a, b, Mark.ARROW)
                    changed |= self._orient(c, b, Mark.ARROW)
                    changed |= self._orient(b, c, Mark.ARROW)
        return changed

    def _rule8(self) -> bool:
        # (a -> b -> c) or (a -o b -> c), with a o-> c: orient tail at a on a-c.
        g = self.g
        changed = False
        for a in range(g.n_vars):
            for c in g.neighbors(a):
                if g.mark(c, a) != Mark.CIRCLE or g.mark(a, c) != Mark.ARROW:
                    continue
                for b in g.neighbors(a):
                    if b == c or not g.adjacent(b, c):
                        continue
                    if not self._is_directed(b, c):
                        continue
                    first_leg = self._is_directed(a, b) or (
                        g.mark(b, a) == Mark.TAIL and g.mark(a, b) == Mark.CIRCLE
                    )
                    if first_leg:
                        changed |= self._orient(c, a, Mark.TAIL)
                        break
        return changed

    def _pd_edge(self, u: int, v: int) -> bool:
        """Edge u-v is potentially directed from u to v: no arrowhead at u, no tail at v."""
        return self.g.mark(v, u) != Mark.ARROW and self.g.mark(u, v) != Mark.TAIL

    def _uncovered_pd_path_exists(self, a: int, first: int, target: int) -> bool:
        """Uncovered potentially-directed path <a, first, ..., target>.

        Every consecutive triple must be unshielded and every edge potentially
        directed along the walk direction.  ``first`` is the fixed second
        vertex of the path.
        """
        g = self.g
        if first == target:
            return g.adjacent(a, first) and self._pd_edge(a, first)
        if not (g.adjacent(a, first) and self._pd_edge(a, first)):
            return False
        stack = [[a, first]]
        while stack:
            path = stack.pop()
            head = path[-1]
            prev = path[-2]
            for v in sorted(g.neighbors(head)):
                if v in path:
                    continue
                if g.adjacent(prev, v):
                    continue  # triple <prev, head, v> must be unshielded
                if not self._pd_edge(head, v):
                    continue
                if v == target:
                    return True
                stack.append(path + [v])
        return False

    def _rule9(self) -> bool:
        # a o-> c plus an uncovered p.d. path <a, b, ..., c> with b, c
        # nonadjacent: orient tail at a on a-c.
        g = self.g
        changed = False
        for a in range(g.n_vars):
            for c in g.neighbors(a):
                if g.mark(c, a) != Mark.CIRCLE or g.mark(a, c) != Mark.ARROW:
                    continue
                for b in g.neighbors(a):
                    if b == c or g.adjacent(b, c):
                        continue
                    if not self._pd_edge(a, b):
                        continue
                    if self._uncovered_pd_path_exists(a, b, c):
                        changed |= self._orient(c, a, Mark.TAIL)
                        break
        return changed

    def _rule10(self) -> bool:
        # a o-> c, b -> c <- d, uncovered p.d. paths a..b and a..d whose first
        # vertices after a differ and are nonadjacent: orient tail at a on a-c.
        g = self.g
        changed = False
        for a in range(g.n_vars):
            for c in g.neighbors(a):
                if g.mark(c, a) != Mark.CIRCLE or g.mark(a, c) != Mark.ARROW:
                    continue
                parents = [v for v in g.neighbors(c) if v != a and self._is_directed(v, c)]
                if len(parents) < 2:
                    continue
                firsts = [v for v in g.neighbors(a) if v != c and self._pd_edge(a, v)]
                done = False
                for mu, omega in combinations(firsts, 2):
                    if g.adjacent(mu, omega):
                        continue
                    for bb, dd in combinations(parents, 2):
                        for p1_first, p2_first in ((mu, omega), (omega, mu)):
                            if self._uncovered_pd_path_exists(
                                a, p1_first, bb
                            ) and self._uncovered_pd_path_exists(a, p2_first, dd):
                                changed |= self._orient(c, a, Mark.TAIL)
                                done = True
                                break
                        if done:
                            break
                    if done:
                        break
        return changed


def apply_orientation_rules(g: MixedGraph, sepsets: SepsetStore) -> tuple[MixedGraph, int]:
    """Run R1-R4, R8-R10 to fixpoint; returns the graph and the conflict count."""
    engine = _RuleEngine(g, sepsets)
    engine.run()
    return g, engine.conflicts


def fci(src: CiSource, var_names: list[str], opts: Optional[FciOptions] = None) -> FciResult:
    """Full FCI pass: complete graph, skeleton search, collider orientation,
    Possible-D-SEP pruning, then the orientation rules to fixpoint."""
    opts = opts or FciOptions()
    if len(var_names) != src.n_vars:
        raise InvalidInputError(
            f"{len(var_names)} variable names for a {src.n_vars}-variable CI source"
        )
    t0 = time.perf_counter()
    start_tests = src.tests_used
    g = new_complete(var_names)
    sepsets = SepsetStore()
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
