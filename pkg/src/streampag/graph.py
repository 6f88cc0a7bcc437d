"""Graph data types: DAGs, mixed graphs with three-valued endpoint marks, sepset storage.

A mixed graph stores at most one edge per unordered vertex pair; each edge
carries one mark per endpoint (circle, arrow, or tail).  ``mark(a, b)`` is the
mark sitting at ``b`` on the edge a-b, so a directed edge a -> b is
``mark(b, a) == TAIL`` and ``mark(a, b) == ARROW``.

Vertices are addressed by their position in ``var_names``; every enumeration
(pairs, neighbors, triples) is ascending-index, which keeps all downstream
constraint-based search deterministic.
"""

from __future__ import annotations

import enum
from itertools import combinations
from typing import Iterable, Iterator, Optional

from .exceptions import InvalidInputError


class Mark(enum.IntEnum):
    CIRCLE = 1
    ARROW = 2
    TAIL = 3


_MARK_NAMES = {Mark.CIRCLE: "circle", Mark.ARROW: "arrow", Mark.TAIL: "tail"}
_MARK_FROM_NAME = {v: k for k, v in _MARK_NAMES.items()}


def mark_name(m: Mark) -> str:
    return _MARK_NAMES[Mark(m)]


def mark_from_name(name: str) -> Mark:
    try:
        return _MARK_FROM_NAME[name]
    except KeyError:
        raise InvalidInputError(f"unknown mark name: {name!r}") from None


def _check_var_names(var_names: Iterable[str]) -> list[str]:
    names = list(var_names)
    if not names:
        raise InvalidInputError("variable list must be nonempty")
    if len(set(names)) != len(names):
        raise InvalidInputError("variable names must be distinct")
    return names


class MixedGraph:
    """Mutable mixed graph over an ordered variable list.

    ``_adj[a][b]`` holds the mark at ``b`` on edge a-b; the key sets of
    ``_adj[a]`` and ``_adj[b]`` stay symmetric while the two stored marks are
    independent.
    """

    def __init__(self, var_names: Iterable[str]):
        self.var_names = _check_var_names(var_names)
        self._adj: list[dict[int, Mark]] = [{} for _ in self.var_names]

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    def copy(self) -> "MixedGraph":
        g = MixedGraph(self.var_names)
        g._adj = [dict(d) for d in self._adj]
        return g

    def _check_vertex(self, v: int) -> None:
        if not 0 <= v < self.n_vars:
            raise InvalidInputError(f"vertex {v} out of range [0, {self.n_vars})")

    def adjacent(self, a: int, b: int) -> bool:
        self._check_vertex(a)
        self._check_vertex(b)
        return b in self._adj[a]

    def add_edge(self, a: int, b: int, mark_at_a: Mark, mark_at_b: Mark) -> None:
        self._check_vertex(a)
        self._check_vertex(b)
        if a == b:
            raise InvalidInputError("self-loops are not allowed")
        if b in self._adj[a]:
            raise InvalidInputError(f"edge {a}-{b} already present")
        self._adj[a][b] = Mark(mark_at_b)
        self._adj[b][a] = Mark(mark_at_a)

    def remove_edge(self, a: int, b: int) -> None:
        if not self.adjacent(a, b):
            raise InvalidInputError(f"no edge {a}-{b} to remove")
        del self._adj[a][b]
        del self._adj[b][a]

    def mark(self, a: int, b: int) -> Mark:
        """Mark at ``b`` on the edge a-b."""
        if not self.adjacent(a, b):
            raise InvalidInputError(f"mark lookup on non-adjacent pair {a},{b}")
        return self._adj[a][b]

    def set_mark(self, a: int, b: int, m: Mark) -> None:
        """Set the mark at ``b`` on the edge a-b."""
        if not self.adjacent(a, b):
            raise InvalidInputError(f"mark set on non-adjacent pair {a},{b}")
        self._adj[a][b] = Mark(m)

    def neighbors(self, a: int) -> list[int]:
        self._check_vertex(a)
        return sorted(self._adj[a])

    def degree(self, a: int) -> int:
        self._check_vertex(a)
        return len(self._adj[a])

    def edge_count(self) -> int:
        return sum(len(d) for d in self._adj) // 2

    def edges(self) -> Iterator[tuple[int, int]]:
        """Unordered edges as (a, b) with a < b, ascending."""
        for a in range(self.n_vars):
            for b in sorted(self._adj[a]):
                if a < b:
                    yield a, b

    def unshielded_triples(self) -> list[tuple[int, int, int]]:
        """All triples <a, b, c> with a-b, b-c adjacent and a, c non-adjacent.

        Each unordered triple appears once, with a < c; the list is sorted by
        (a, b, c).
        """
        out = []
        for b in range(self.n_vars):
            nbrs = self.neighbors(b)
            for a, c in combinations(nbrs, 2):
                if not self.adjacent(a, c):
                    out.append((a, b, c))
        out.sort()
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MixedGraph):
            return NotImplemented
        return self.var_names == other.var_names and self._adj == other._adj

    def __repr__(self) -> str:
        return f"MixedGraph({self.n_vars} vars, {self.edge_count()} edges)"

    def to_json(self) -> dict:
        """PAG JSON document: variable names plus per-edge endpoint marks."""
        edges = []
        for a, b in self.edges():
            edges.append(
                {
                    "a": self.var_names[a],
                    "b": self.var_names[b],
                    "mark_a": mark_name(self.mark(b, a)),
                    "mark_b": mark_name(self.mark(a, b)),
                }
            )
        return {"vars": list(self.var_names), "edges": edges}

    @classmethod
    def from_json(cls, doc: dict) -> "MixedGraph":
        g = cls(doc["vars"])
        index = {name: i for i, name in enumerate(g.var_names)}
        for e in doc["edges"]:
            try:
                a, b = index[e["a"]], index[e["b"]]
            except KeyError as exc:
                raise InvalidInputError(f"edge references unknown variable {exc}") from None
            g.add_edge(a, b, mark_from_name(e["mark_a"]), mark_from_name(e["mark_b"]))
        return g


def new_complete(var_names: Iterable[str]) -> MixedGraph:
    """Complete graph with circle marks at both ends of every edge."""
    g = MixedGraph(var_names)
    for a in range(g.n_vars):
        for b in range(a + 1, g.n_vars):
            g.add_edge(a, b, Mark.CIRCLE, Mark.CIRCLE)
    return g


class Dag:
    """Directed acyclic graph; acyclicity is checked at construction."""

    def __init__(self, var_names: Iterable[str], edges: Iterable[tuple[int, int]]):
        self.var_names = _check_var_names(var_names)
        n = len(self.var_names)
        self.parents: list[list[int]] = [[] for _ in range(n)]
        self.children: list[list[int]] = [[] for _ in range(n)]
        seen = set()
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidInputError(f"edge ({u},{v}) out of range")
            if u == v:
                raise InvalidInputError("self-loops are not allowed")
            if (u, v) in seen:
                raise InvalidInputError(f"duplicate edge ({u},{v})")
            seen.add((u, v))
            self.parents[v].append(u)
            self.children[u].append(v)
        for lst in self.parents:
            lst.sort()
        for lst in self.children:
            lst.sort()
        self._topo_order = self._toposort()

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.n_vars) for v in self.children[u]]

    def _toposort(self) -> list[int]:
        indeg = [len(p) for p in self.parents]
        ready = sorted(v for v in range(self.n_vars) if indeg[v] == 0)
        order = []
        while ready:
            v = ready.pop(0)
            order.append(v)
            for c in self.children[v]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
            ready.sort()
        if len(order) != self.n_vars:
            raise InvalidInputError("edge set contains a directed cycle")
        return order

    def topological_order(self) -> list[int]:
        return list(self._topo_order)

    def ancestors(self, v: int) -> set[int]:
        """Proper ancestors of ``v`` (excludes ``v``)."""
        out: set[int] = set()
        stack = list(self.parents[v])
        while stack:
            u = stack.pop()
            if u not in out:
                out.add(u)
                stack.extend(self.parents[u])
        return out

    def descendants(self, v: int) -> set[int]:
        """Proper descendants of ``v`` (excludes ``v``)."""
        out: set[int] = set()
        stack = list(self.children[v])
        while stack:
            u = stack.pop()
            if u not in out:
                out.add(u)
                stack.extend(self.children[u])
        return out


class SepsetStore:
    """Separating sets recorded per unordered variable pair.

    Lookups are order-symmetric and the stored set never contains either pair
    member; a recorded empty set is distinct from an absent entry.
    """

    def __init__(self):
        self._entries: dict[tuple[int, int], frozenset[int]] = {}

    @staticmethod
    def _key(a: int, b: int) -> tuple[int, int]:
        if a == b:
            raise InvalidInputError("sepset pair members must differ")
        return (a, b) if a < b else (b, a)

    def record(self, a: int, b: int, sepset: Iterable[int]) -> None:
        s = frozenset(sepset)
        if a in s or b in s:
            raise InvalidInputError("sepset must not contain either pair member")
        self._entries[self._key(a, b)] = s

    def lookup(self, a: int, b: int) -> Optional[frozenset[int]]:
        return self._entries.get(self._key(a, b))

    def pairs(self) -> list[tuple[int, int]]:
        return sorted(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SepsetStore):
            return NotImplemented
        return self._entries == other._entries

    def copy(self) -> "SepsetStore":
        s = SepsetStore()
        s._entries = dict(self._entries)
        return s

    def merge_from(self, other: "SepsetStore") -> None:
        """Adopt every entry of ``other``, overwriting on collision."""
        self._entries.update(other._entries)

    def to_json(self, var_names: list[str]) -> dict:
        pairs = []
        for a, b in self.pairs():
            pairs.append(
                {
                    "a": var_names[a],
                    "b": var_names[b],
                    "sepset": [var_names[i] for i in sorted(self._entries[(a, b)])],
                }
            )
        return {"pairs": pairs}

    @classmethod
    def from_json(cls, doc: dict, var_names: list[str]) -> "SepsetStore":
        index = {name: i for i, name in enumerate(var_names)}
        store = cls()
        for entry in doc["pairs"]:
            try:
                a, b = index[entry["a"]], index[entry["b"]]
                s = [index[name] for name in entry["sepset"]]
            except KeyError as exc:
                raise InvalidInputError(f"sepset references unknown variable {exc}") from None
            store.record(a, b, s)
        return store
