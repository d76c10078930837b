"""Input graph model: undirected topology with a directed weight function.

Arcs are stored grouped by tail in a flat adjacency array, sorted by head
within each group. A stored arc (u, v) carries the cost of traversing the
edge {u, v} from u to v; if the reverse arc is absent it is semantically
present with weight INFINITY. This keeps one-way streets representable
while the topology itself stays undirected.

All weights are 32-bit unsigned integers. INFINITY is the largest
representable value and all additions saturate there, so unreachability
never wraps around into a finite distance.
"""

from __future__ import annotations

import heapq
from bisect import bisect_left
from dataclasses import dataclass, field

from .errors import ConsistencyError

INFINITY = 0xFFFFFFFF
"""Reserved sentinel: maximum 32-bit unsigned value, never a real weight."""


def saturating_add(a: int, b: int) -> int:
    """Add two weights, clamping the result at INFINITY."""
    c = a + b
    return c if c < INFINITY else INFINITY


@dataclass
class InputGraph:
    """Immutable weighted graph in adjacency-array form.

    ``first_out[u]:first_out[u+1]`` is the arc range of vertex ``u`` into
    the parallel ``head``/``weight``/``tail`` arrays. ``arc_origin`` maps
    each stored arc back to the arc index it had before a vertex
    relabeling (None means the identity). Instances are treated as
    immutable after construction and may be shared across threads.
    """

    vertex_count: int
    first_out: list[int]
    head: list[int]
    weight: list[int]
    tail: list[int]
    arc_origin: list[int] | None = None
    dropped_self_loops: int = 0
    _undirected: list[list[int]] | None = field(default=None, repr=False, compare=False)

    @property
    def arc_count(self) -> int:
        return len(self.head)

    @classmethod
    def from_arcs(cls, vertex_count: int, arcs) -> InputGraph:
        """Build a graph from (tail, head, weight) triples.

        Self-loops are dropped (counted in ``dropped_self_loops``) and
        parallel arcs collapse to their minimum weight.
        """
        best: dict[tuple[int, int], int] = {}
        dropped = 0
        for t, h, w in arcs:
            if not (0 <= t < vertex_count and 0 <= h < vertex_count):
                raise ConsistencyError(f"arc ({t}, {h}) out of vertex range [0, {vertex_count})")
            if not (0 <= w < INFINITY):
                raise ConsistencyError(f"arc ({t}, {h}) weight {w} outside [0, {INFINITY})")
            if t == h:
                dropped += 1
                continue
            key = (t, h)
            prev = best.get(key)
            if prev is None or w < prev:
                best[key] = w
        ordered = sorted(best.items())
        first_out = [0] * (vertex_count + 1)
        head = []
        weight = []
        tail = []
        for (t, h), w in ordered:
            first_out[t + 1] += 1
            tail.append(t)
            head.append(h)
            weight.append(w)
        for u in range(vertex_count):
            first_out[u + 1] += first_out[u]
        return cls(vertex_count, first_out, head, weight, tail,
                   dropped_self_loops=dropped)

    def arc_index(self, u: int, v: int) -> int | None:
        """Index of the stored arc (u, v), or None if absent."""
        lo, hi = self.first_out[u], self.first_out[u + 1]
        i = bisect_left(self.head, v, lo, hi)
        if i < hi and self.head[i] == v:
            return i
        return None

    def out_range(self, u: int) -> range:
        return range(self.first_out[u], self.first_out[u + 1])

    def undirected_adjacency(self) -> list[list[int]]:
        """Sorted neighbor lists of the undirected topology (cached)."""
        if self._undirected is None:
            nbrs: list[set[int]] = [set() for _ in range(self.vertex_count)]
            for i in range(len(self.head)):
                t, h = self.tail[i], self.head[i]
                nbrs[t].add(h)
                nbrs[h].add(t)
            self._undirected = [sorted(s) for s in nbrs]
        return self._undirected

    def undirected_edges(self) -> list[tuple[int, int]]:
        """All unordered pairs {u, v} with at least one stored direction."""
        seen = set()
        for i in range(len(self.head)):
            t, h = self.tail[i], self.head[i]
            seen.add((t, h) if t < h else (h, t))
        return sorted(seen)


@dataclass
class Coordinates:
    """Per-vertex fixed-point geographic coordinates."""

    x: list[int]
    y: list[int]

    def __len__(self) -> int:
        return len(self.x)


def dijkstra(g: InputGraph, source: int, targets=None, stats: dict | None = None) -> list[int]:
    """One-to-all (or early-terminated one-to-many) exact distances.

    This is the correctness oracle for every accelerated query in the
    toolkit: plain Dijkstra on the stored arcs with saturating arithmetic.
    When ``targets`` is given the search stops once all of them are
    settled. ``stats["settled"]`` receives the settle count if provided.
    """
    n = g.vertex_count
    if not (0 <= source < n):
        raise ConsistencyError(f"source {source} out of range [0, {n})")
    dist = [INFINITY] * n
    dist[source] = 0
    first_out, head, weight = g.first_out, g.head, g.weight
    remaining = set(targets) if targets is not None else None
    settled = 0
    heap = [(0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d != dist[u] or d == INFINITY:
            continue
        settled += 1
        if remaining is not None:
            remaining.discard(u)
            if not remaining:
                break
        for e in range(first_out[u], first_out[u + 1]):
            v = head[e]
            nd = d + weight[e]
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    if stats is not None:
        stats["settled"] = settled
    return dist
