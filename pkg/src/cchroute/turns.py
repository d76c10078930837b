"""Turn-cost modeling by graph expansion.

Turn costs and restrictions become part of the graph itself: every stored
arc of the input becomes a vertex of the expanded graph, and every
permitted turn (in-arc, out-arc) at a shared via vertex becomes an arc
weighted with the in-arc's travel cost plus the turn cost. All other
algorithms then run on the expanded graph unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dimacs import FORBIDDEN
from .errors import ConsistencyError
from .graph import InputGraph


@dataclass
class TurnExpansion:
    """Expanded graph plus the mapping between arc-vertices and input arcs."""

    graph: InputGraph
    vertex_of_arc: list[int]
    arc_of_vertex: list[int]
    turn_table: dict[tuple[int, int], int]


def expand_turns(g: InputGraph, turns: dict[tuple[int, int], int]) -> TurnExpansion:
    """Expand ``g`` into its turn-aware graph.

    ``turns`` maps (in-arc id, out-arc id) to a cost, or FORBIDDEN to drop
    the turn entirely; pairs absent from the table are free. Both arcs of
    a pair must share a via vertex: head(in) == tail(out).
    """
    m = g.arc_count
    for (a, b), cost in turns.items():
        if not (0 <= a < m and 0 <= b < m):
            raise ConsistencyError(f"turn ({a}, {b}) references nonexistent arc")
        if g.head[a] != g.tail[b]:
            raise ConsistencyError(
                f"turn ({a}, {b}) does not share a via vertex: "
                f"head {g.head[a]} != tail {g.tail[b]}")
        if cost != FORBIDDEN and cost < 0:
            raise ConsistencyError(f"turn ({a}, {b}) has negative cost {cost}")

    vertex_of_arc = list(range(m))
    arc_of_vertex = list(range(m))
    expanded_arcs = []
    for a in range(m):
        via = g.head[a]
        la = g.weight[a]
        for b in range(g.first_out[via], g.first_out[via + 1]):
            cost = turns.get((a, b), 0)
            if cost == FORBIDDEN:
                continue
            expanded_arcs.append((a, b, la + cost))
    expanded = InputGraph.from_arcs(m, expanded_arcs)
    return TurnExpansion(graph=expanded, vertex_of_arc=vertex_of_arc,
                         arc_of_vertex=arc_of_vertex, turn_table=dict(turns))


def expanded_coordinates(g: InputGraph, coords, expansion: TurnExpansion):
    """Midpoint coordinates for arc-vertices, usable by inertial ordering."""
    from .graph import Coordinates

    xs = []
    ys = []
    for a in expansion.arc_of_vertex:
        t, h = g.tail[a], g.head[a]
        xs.append((coords.x[t] + coords.x[h]) // 2)
        ys.append((coords.y[t] + coords.y[h]) // 2)
    return Coordinates(x=xs, y=ys)
