"""Rank orders via nested dissection with inertial-flow separators.

A rank order drives the contraction: vertices are eliminated by ascending
rank, and separator vertices always rank above the cells they split. The
recursion tree of the dissection is kept as a separator decomposition,
which later phases reuse for parallel scheduling and nearest-neighbor
pruning.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .errors import ConsistencyError
from .graph import Coordinates, InputGraph

DEFAULT_CELL_CUTOFF = 8


@dataclass
class SeparatorDecomposition:
    """Node of the recursion tree over contiguous rank ranges.

    The cell occupies ranks [cell_lo, cell_hi) and its separator is the
    suffix [sep_lo, cell_hi). Children partition [cell_lo, sep_lo). A node
    whose separator spans the whole cell is a leaf.
    """

    cell_lo: int
    cell_hi: int
    sep_lo: int
    children: list[SeparatorDecomposition] = field(default_factory=list)

    def preorder(self):
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))


@dataclass
class RankOrder:
    """Mutually inverse vertex<->rank permutations."""

    rank_of: list[int]
    vertex_at: list[int]
    decomposition: SeparatorDecomposition | None = None

    @classmethod
    def from_vertex_at(cls, vertex_at: list[int],
                       decomposition: SeparatorDecomposition | None = None) -> RankOrder:
        n = len(vertex_at)
        rank_of = [-1] * n
        for r, v in enumerate(vertex_at):
            if not (0 <= v < n):
                raise ConsistencyError(f"rank {r}: vertex {v} out of range [0, {n})")
            if rank_of[v] != -1:
                raise ConsistencyError(f"vertex {v} appears at ranks {rank_of[v]} and {r}")
            rank_of[v] = r
        return cls(rank_of=rank_of, vertex_at=list(vertex_at), decomposition=decomposition)

    @classmethod
    def identity(cls, n: int) -> RankOrder:
        ids = list(range(n))
        return cls(rank_of=list(ids), vertex_at=ids)


@dataclass
class Separator:
    """A separator and the cells left when it is removed."""

    vertices: list[int]
    cells: list[list[int]]


@dataclass
class _FlowGraph:
    """Unit-capacity residual network over a cell's undirected edges."""

    first: list[int]
    to: list[int]
    cap: list[int]
    twin: list[int]

    @classmethod
    def build(cls, local_adj: list[list[int]]) -> _FlowGraph:
        first = [0] * (len(local_adj) + 1)
        to: list[int] = []
        cap: list[int] = []
        arc_at: dict[tuple[int, int], int] = {}
        for u, nbrs in enumerate(local_adj):
            first[u + 1] = first[u] + len(nbrs)
            for v in nbrs:
                arc_at[(u, v)] = len(to)
                to.append(v)
                cap.append(1)
        twin = [arc_at[(to[e], u)] for u in range(len(local_adj))
                for e in range(first[u], first[u + 1])]
        return cls(first=first, to=to, cap=cap, twin=twin)


def _min_cut(flow: _FlowGraph, sources: list[int], sinks: list[int]) -> tuple[int, list[bool]]:
    """Edmonds-Karp with contracted terminals.

    Returns the cut value and the residual-reachable (source) side. Cut
    values are tiny on road-like cells, so shortest augmenting paths are
    plenty fast.
    """
    n = len(flow.first) - 1
    first, to, cap, twin = flow.first, flow.to, flow.cap, flow.twin
    is_source = [False] * n
    is_sink = [False] * n
    for s in sources:
        is_source[s] = True
    for t in sinks:
        is_sink[t] = True
    value = 0
    parent_arc = [-1] * n
    while True:
        for i in range(n):
            parent_arc[i] = -1
        queue = deque(sources)
        reached = None
        visited = list(is_source)
        while queue:
            u = queue.popleft()
            if is_sink[u]:
                reached = u
                break
            for e in range(first[u], first[u + 1]):
                v = to[e]
                if not visited[v] and cap[e] > 0:
                    visited[v] = True
                    parent_arc[v] = e
                    queue.append(v)
        if reached is None:
            return value, visited
        value += 1
        v = reached
        while not is_source[v]:
            e = parent_arc[v]
            cap[e] -= 1
            cap[twin[e]] += 1
            v = to[twin[e]]


_AXES = ("sn", "we", "swne", "senw")


def _projection(axis: str, coords: Coordinates, v: int) -> int:
    if axis == "sn":
        return coords.y[v]
    if axis == "we":
        return coords.x[v]
    if axis == "swne":
        return coords.x[v] + coords.y[v]
    return coords.x[v] - coords.y[v]


def inertial_flow_separator(g: InputGraph, coords: Coordinates,
                            cell: list[int] | None = None) -> Separator:
    """Smallest inertial-flow separator of a connected cell.

    For each of the four axes, vertices are sorted by their projection,
    the first and last quarter are contracted into terminals, and a
    minimum cut on the unit-capacity undirected topology is computed. The
    candidate separator consists of the cut edges' endpoints on the
    smaller side; the smallest candidate wins, ties broken by better
    balance and then by axis order.
    """
    adj = g.undirected_adjacency()
    if cell is None:
        cell = list(range(g.vertex_count))
    n = len(cell)
    if n < 2:
        raise ConsistencyError("cell must contain at least two vertices")
    local_of = {v: i for i, v in enumerate(cell)}
    local_adj = [[local_of[w] for w in adj[v] if w in local_of] for v in cell]
    quarter = (n + 3) // 4

    best = None
    for axis in _AXES:
        by_proj = sorted(cell, key=lambda v: (_projection(axis, coords, v), v))
        sources = [local_of[v] for v in by_proj[:quarter]]
        sinks = [local_of[v] for v in by_proj[-quarter:]]
        flow = _FlowGraph.build(local_adj)
        value, source_side = _min_cut(flow, sources, sinks)
        side_a = sum(source_side)
        side_b = n - side_a
        take_source_side = side_a <= side_b
        sep_local = set()
        for u in range(n):
            if not source_side[u]:
                continue
            for w in local_adj[u]:
                if not source_side[w]:
                    sep_local.add(u if take_source_side else w)
        candidate = sorted(cell[i] for i in sep_local)
        score = (len(candidate), abs(side_a - side_b))
        if best is None or score < best[0]:
            best = (score, candidate)

    sep_vertices = best[1]
    in_sep = set(sep_vertices)
    cells = _components([v for v in cell if v not in in_sep], adj)
    return Separator(vertices=sep_vertices, cells=cells)


def _components(vertices: list[int], adj: list[list[int]]) -> list[list[int]]:
    """Connected components of the induced subgraph, in discovery order."""
    allowed = set(vertices)
    seen: set[int] = set()
    comps = []
    for start in vertices:
        if start in seen:
            continue
        comp = [start]
        seen.add(start)
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if w in allowed and w not in seen:
                    seen.add(w)
                    comp.append(w)
                    queue.append(w)
        comps.append(sorted(comp))
    return comps


def nested_dissection_order(g: InputGraph, coords: Coordinates,
                            cell_cutoff: int = DEFAULT_CELL_CUTOFF) -> RankOrder:
    """Compute a nested dissection order, recording the recursion tree.

    Separator vertices take the highest ranks of their cell's range.
    Cells at or below ``cell_cutoff`` vertices are ordered by ascending
    induced degree, then ID. Disconnected cells split into one child per
    component with no separator between them.
    """
    n = g.vertex_count
    if len(coords) != n:
        raise ConsistencyError(f"coordinates cover {len(coords)} vertices, graph has {n}")
    adj = g.undirected_adjacency()
    rank_of = [-1] * n
    # Each work item appends its own node to the parent's child list when
    # popped; children are pushed in reverse so cells come off in order.
    root_children: list[SeparatorDecomposition] = []
    stack: list[tuple[list[int], int, list[SeparatorDecomposition]]] = [
        (list(range(n)), 0, root_children)]
    while stack:
        cell, lo, out = stack.pop()
        hi = lo + len(cell)
        if len(cell) <= cell_cutoff:
            allowed = set(cell)
            by_degree = sorted(cell, key=lambda v: (sum(1 for w in adj[v] if w in allowed), v))
            for offset, v in enumerate(by_degree):
                rank_of[v] = lo + offset
            out.append(SeparatorDecomposition(lo, hi, lo))
            continue
        comps = _components(cell, adj)
        if len(comps) > 1:
            node = SeparatorDecomposition(lo, hi, hi)
            out.append(node)
            offsets = []
            off = lo
            for comp in comps:
                offsets.append(off)
                off += len(comp)
            for comp, comp_lo in zip(reversed(comps), reversed(offsets)):
                stack.append((comp, comp_lo, node.children))
            continue
        sep = inertial_flow_separator(g, coords, cell)
        sep_lo = hi - len(sep.vertices)
        for offset, v in enumerate(sep.vertices):
            rank_of[v] = sep_lo + offset
        node = SeparatorDecomposition(lo, hi, sep_lo)
        out.append(node)
        offsets = []
        off = lo
        for child in sep.cells:
            offsets.append(off)
            off += len(child)
        for child, child_lo in zip(reversed(sep.cells), reversed(offsets)):
            stack.append((child, child_lo, node.children))

    root = root_children[0]
    vertex_at = [-1] * n
    for v, r in enumerate(rank_of):
        vertex_at[r] = v
    return RankOrder(rank_of=rank_of, vertex_at=vertex_at, decomposition=root)


def import_order(path: str, n: int) -> RankOrder:
    """Read an order file: n lines, line r holds the vertex at rank r."""
    vertex_at = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                vertex_at.append(int(line))
            except ValueError:
                raise ConsistencyError(f"line {lineno}: not a vertex ID: {line!r}") from None
    if len(vertex_at) != n:
        raise ConsistencyError(f"order file has {len(vertex_at)} lines, expected {n}")
    return RankOrder.from_vertex_at(vertex_at)


def export_order(order: RankOrder, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for v in order.vertex_at:
            f.write(f"{v}\n")


def dfs_postorder_reorder(order: RankOrder, parent: list[int]) -> RankOrder:
    """Improve an order to a DFS post-order of its elimination tree.

    Children of each tree node are visited in ascending old-rank order,
    so every subtree occupies a contiguous rank range and each vertex
    still ranks above all of its descendants. The augmented graph built
    from the new order is isomorphic to the old one under the relabeling.
    """
    n = len(order.rank_of)
    if len(parent) != n:
        raise ConsistencyError(f"elimination tree covers {len(parent)} vertices, order has {n}")
    children: list[list[int]] = [[] for _ in range(n)]
    roots = []
    for u in range(n):
        p = parent[u]
        if p == -1:
            roots.append(u)
        else:
            children[p].append(u)
    post = [-1] * n
    counter = 0
    for root in roots:
        stack = [(root, 0)]
        while stack:
            v, i = stack.pop()
            if i < len(children[v]):
                stack.append((v, i + 1))
                stack.append((children[v][i], 0))
            else:
                post[v] = counter
                counter += 1
    new_rank_of = [post[order.rank_of[v]] for v in range(n)]
    vertex_at = [-1] * n
    for v, r in enumerate(new_rank_of):
        vertex_at[r] = v
    return RankOrder(rank_of=new_rank_of, vertex_at=vertex_at)
