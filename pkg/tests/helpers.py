"""Shared test fixtures: instance generators and brute-force oracles.

The oracles here are deliberately naive (path enumeration, the textbook
elimination game, exhaustive cut enumeration) so they stay independent of
the code paths they check.
"""

from __future__ import annotations

import random
from itertools import combinations

from cchroute import Coordinates, InputGraph, INFINITY, build_cch, customize


def diamond() -> InputGraph:
    """Four vertices u=0, v=1, w=2, x=3 with symmetric weights
    uv=1, uw=10, vx=1, wx=1; identity order is already the rank order."""
    arcs = []
    for a, b, w in [(0, 1, 1), (0, 2, 10), (1, 3, 1), (2, 3, 1)]:
        arcs.append((a, b, w))
        arcs.append((b, a, w))
    return InputGraph.from_arcs(4, arcs)


def grid_graph(rng: random.Random, rows: int, cols: int,
               one_way: float = 0.0, max_weight: int = 1000):
    """Grid with random integer weights; a fraction of edges is one-way."""
    n = rows * cols
    arcs = []

    def vid(r, c):
        return r * cols + c

    for r in range(rows):
        for c in range(cols):
            for r2, c2 in ((r + 1, c), (r, c + 1)):
                if r2 >= rows or c2 >= cols:
                    continue
                a, b = vid(r, c), vid(r2, c2)
                if rng.random() < one_way:
                    if rng.random() < 0.5:
                        a, b = b, a
                    arcs.append((a, b, rng.randint(1, max_weight)))
                else:
                    arcs.append((a, b, rng.randint(1, max_weight)))
                    arcs.append((b, a, rng.randint(1, max_weight)))
    g = InputGraph.from_arcs(n, arcs)
    coords = Coordinates(x=[v % cols for v in range(n)], y=[v // cols for v in range(n)])
    return g, coords


def random_connected_graph(rng: random.Random, n: int, extra_factor: float = 0.4,
                           one_way: float = 0.2, max_weight: int = 1000):
    """Road-like random instance: random points, a geometric spanning tree
    plus extra short edges, ~20% one-way arcs."""
    pts = [(rng.randint(0, 10000), rng.randint(0, 10000)) for _ in range(n)]

    def d2(a, b):
        return (pts[a][0] - pts[b][0]) ** 2 + (pts[a][1] - pts[b][1]) ** 2

    edges = set()
    attached = [0]
    for v in range(1, n):
        candidates = rng.sample(attached, min(3, len(attached)))
        u = min(candidates, key=lambda c: d2(v, c))
        edges.add((min(u, v), max(u, v)))
        attached.append(v)
    for _ in range(int(extra_factor * n)):
        v = rng.randrange(n)
        w = min(rng.sample(range(n), min(4, n)), key=lambda c: d2(v, c) or 1 << 60)
        if v != w:
            edges.add((min(v, w), max(v, w)))

    arcs = []
    for a, b in sorted(edges):
        if rng.random() < one_way:
            if rng.random() < 0.5:
                a, b = b, a
            arcs.append((a, b, rng.randint(1, max_weight)))
        else:
            arcs.append((a, b, rng.randint(1, max_weight)))
            arcs.append((b, a, rng.randint(1, max_weight)))
    g = InputGraph.from_arcs(n, arcs)
    coords = Coordinates(x=[p[0] for p in pts], y=[p[1] for p in pts])
    return g, coords


def random_order(rng: random.Random, n: int):
    from cchroute import RankOrder

    vertex_at = list(range(n))
    rng.shuffle(vertex_at)
    return RankOrder.from_vertex_at(vertex_at)


def build_customized(g, coords, use_perfect=True, threads=1):
    cch = build_cch(g, coords)
    return cch, customize(cch, list(g.weight), use_perfect=use_perfect, threads=threads)


def enumerate_path_distance(g: InputGraph, s: int, t: int) -> int:
    """Shortest s-t distance by exhaustive simple-path enumeration.

    Only usable on tiny graphs; the independent oracle for Dijkstra.
    """
    best = 0 if s == t else INFINITY

    def walk(u, dist, seen):
        nonlocal best
        if u == t:
            best = min(best, dist)
            return
        for e in range(g.first_out[u], g.first_out[u + 1]):
            v = g.head[e]
            if v not in seen:
                walk(v, dist + g.weight[e], seen | {v})

    if s != t:
        walk(s, 0, {s})
    return best


def naive_elimination_arcs(n: int, undirected_edges) -> set[tuple[int, int]]:
    """Textbook elimination game on vertices 0..n-1 in ID order.

    Returns the upward arc set (lower ID first) of the chordal
    completion: repeatedly remove the lowest vertex and connect its
    remaining neighbors pairwise.
    """
    nbrs = [set() for _ in range(n)]
    for a, b in undirected_edges:
        nbrs[a].add(b)
        nbrs[b].add(a)
    arcs = set()
    for u in range(n):
        upper = sorted(w for w in nbrs[u] if w > u)
        for w in upper:
            arcs.add((u, w))
        for a, b in combinations(upper, 2):
            nbrs[a].add(b)
            nbrs[b].add(a)
    return arcs


def brute_force_min_cut(adj: list[list[int]], sources: set[int], sinks: set[int]) -> int:
    """Minimum s-t edge cut by enumerating all vertex bipartitions."""
    n = len(adj)
    others = [v for v in range(n) if v not in sources and v not in sinks]
    edges = {(u, v) for u in range(n) for v in adj[u] if u < v}
    best = len(edges) + 1
    for mask in range(1 << len(others)):
        side = set(sources)
        for i, v in enumerate(others):
            if mask >> i & 1:
                side.add(v)
        cut = sum(1 for (u, v) in edges if (u in side) != (v in side))
        best = min(best, cut)
    return best


def turn_respecting_distance(g: InputGraph, turns, start_arc: int, end_arc: int) -> int:
    """Brute-force minimum over turn-respecting arc sequences.

    Cost convention matches the expansion: the weight of every arc except
    the last is paid, plus all turn costs along the way.
    """
    from cchroute import FORBIDDEN

    best = 0 if start_arc == end_arc else INFINITY

    def walk(arc, cost, seen):
        nonlocal best
        if cost >= best:
            return
        if arc == end_arc:
            best = cost
            return
        via = g.head[arc]
        for nxt in range(g.first_out[via], g.first_out[via + 1]):
            turn = turns.get((arc, nxt), 0)
            if turn == FORBIDDEN or nxt in seen:
                continue
            walk(nxt, cost + g.weight[arc] + turn, seen | {nxt})

    if start_arc != end_arc:
        walk(start_arc, 0, {start_arc})
    return best
