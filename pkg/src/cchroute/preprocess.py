"""Metric-independent preprocessing: chordal completion and its byproducts.

Contracting vertices in rank order completes each vertex's higher-ranked
neighborhood into a clique. We store only the upward orientation of the
result, grouped by tail with heads ascending; every vertex's first upward
neighbor is its parent in the elimination tree. Vertex IDs must equal
ranks before contraction (see ``permute_to_rank_ids``), which keeps every
later phase cache-friendly and makes rank comparisons plain integer
comparisons.
"""

from __future__ import annotations

import struct
import sys
from array import array
from bisect import bisect_left
from dataclasses import dataclass

from .errors import ConsistencyError, FormatError
from .graph import InputGraph
from .order import RankOrder, SeparatorDecomposition, dfs_postorder_reorder, nested_dissection_order

SENTINEL = -1
"""Parent value of elimination-tree roots; also the 'no arc' marker."""

MAGIC = b"CCHP"
VERSION = 1


@dataclass
class UpwardGraph:
    """Chordal completion stored as upward arcs grouped by tail.

    ``down_first``/``down_arc`` index the same arcs by head (the downward
    incidence needed by the batched customization). ``orig_up[i]`` /
    ``orig_down[i]`` give the input arc whose direction matches arc i's
    tail->head (resp. head->tail) traversal, or SENTINEL for shortcuts
    and missing one-way directions. ``input_arc_count`` is the length of
    the weight functions this hierarchy can be customized with.
    """

    vertex_count: int
    first_arc: list[int]
    head: list[int]
    tail: list[int]
    down_first: list[int]
    down_arc: list[int]
    orig_up: list[int]
    orig_down: list[int]
    input_arc_count: int

    @property
    def arc_count(self) -> int:
        return len(self.head)

    def arc_index(self, u: int, v: int) -> int | None:
        lo, hi = self.first_arc[u], self.first_arc[u + 1]
        i = bisect_left(self.head, v, lo, hi)
        if i < hi and self.head[i] == v:
            return i
        return None


def permute_to_rank_ids(g: InputGraph, order: RankOrder) -> InputGraph:
    """Relabel vertices so that IDs equal ranks.

    Weights travel with their arcs and ``arc_origin`` composes, so the
    permuted graph still knows which input arc each of its arcs came from.
    """
    n = g.vertex_count
    if len(order.rank_of) != n:
        raise ConsistencyError(f"order covers {len(order.rank_of)} vertices, graph has {n}")
    rank_of = order.rank_of
    relabeled = []
    for i in range(g.arc_count):
        origin = g.arc_origin[i] if g.arc_origin is not None else i
        relabeled.append((rank_of[g.tail[i]], rank_of[g.head[i]], g.weight[i], origin))
    relabeled.sort()
    first_out = [0] * (n + 1)
    head = []
    weight = []
    tail = []
    origin_list = []
    for t, h, w, origin in relabeled:
        first_out[t + 1] += 1
        tail.append(t)
        head.append(h)
        weight.append(w)
        origin_list.append(origin)
    for u in range(n):
        first_out[u + 1] += first_out[u]
    return InputGraph(n, first_out, head, weight, tail, arc_origin=origin_list,
                      dropped_self_loops=g.dropped_self_loops)


def contract(g: InputGraph) -> UpwardGraph:
    """Chordal completion of ``g`` under the identity rank order.

    Processes vertices by ascending rank; each pending neighborhood is
    sorted and deduplicated only when its vertex is reached, and the
    remainder past the lowest upward neighbor is concatenated onto that
    neighbor's pending list. The arc set equals the one produced by the
    naive elimination game.
    """
    n = g.vertex_count
    pending: list[list[int]] = [[] for _ in range(n)]
    for i in range(g.arc_count):
        t, h = g.tail[i], g.head[i]
        if t < h:
            pending[t].append(h)
        else:
            pending[h].append(t)
    first_arc = [0] * (n + 1)
    head: list[int] = []
    for u in range(n):
        nb = pending[u]
        if nb:
            nb = sorted(set(nb))
            if len(nb) > 1:
                pending[nb[0]].extend(nb[1:])
            head.extend(nb)
        pending[u] = []
        first_arc[u + 1] = len(head)

    m = len(head)
    tail = [0] * m
    for u in range(n):
        for e in range(first_arc[u], first_arc[u + 1]):
            tail[e] = u

    # Downward incidence: arcs bucketed by head; arc IDs ascend within
    # each bucket, so tails ascend too.
    down_first = [0] * (n + 1)
    for h in head:
        down_first[h + 1] += 1
    for v in range(n):
        down_first[v + 1] += down_first[v]
    down_arc = [0] * m
    cursor = list(down_first)
    for e in range(m):
        h = head[e]
        down_arc[cursor[h]] = e
        cursor[h] += 1

    ug = UpwardGraph(n, first_arc, head, tail, down_first, down_arc,
                     orig_up=[SENTINEL] * m, orig_down=[SENTINEL] * m,
                     input_arc_count=g.arc_count)
    for i in range(g.arc_count):
        t, h = g.tail[i], g.head[i]
        origin = g.arc_origin[i] if g.arc_origin is not None else i
        if t < h:
            ug.orig_up[ug.arc_index(t, h)] = origin
        else:
            ug.orig_down[ug.arc_index(h, t)] = origin
    return ug


def build_elimination_tree(ug: UpwardGraph) -> list[int]:
    """Parent array: each vertex's lowest upward neighbor, or SENTINEL."""
    parent = [SENTINEL] * ug.vertex_count
    for u in range(ug.vertex_count):
        lo, hi = ug.first_arc[u], ug.first_arc[u + 1]
        if lo < hi:
            parent[u] = ug.head[lo]
    return parent


def subtree_sizes(parent: list[int]) -> list[int]:
    """Subtree size per vertex; a single ascending pass works because
    every parent outranks its children."""
    n = len(parent)
    size = [1] * n
    for u in range(n):
        p = parent[u]
        if p != SENTINEL:
            if p <= u:
                raise ConsistencyError(f"parent {p} of vertex {u} does not outrank it")
            size[p] += size[u]
    return size


def reconstruct_separator_decomposition(parent: list[int]) -> SeparatorDecomposition:
    """Rebuild the separator decomposition from an elimination tree.

    Requires ranks to be a DFS post-order of the tree (each subtree a
    contiguous rank range). For each subtree, the path from the highest
    vertex with more than one child up to the subtree root is the
    separator; the child subtrees below it become the child cells. A
    subtree that is a bare path is a leaf whose separator is the whole
    path.
    """
    n = len(parent)
    size = subtree_sizes(parent)
    children: list[list[int]] = [[] for _ in range(n)]
    roots = []
    for u in range(n):
        p = parent[u]
        if p == SENTINEL:
            roots.append(u)
        else:
            children[p].append(u)

    def check_tiling(lo: int, hi: int, kids: list[int]) -> None:
        expected_end = hi
        for c in reversed(kids):
            if c != expected_end - 1:
                raise ConsistencyError(
                    "subtree rank ranges not contiguous; order is not a DFS post-order")
            expected_end = c - size[c] + 1
        if expected_end != lo:
            raise ConsistencyError(
                "subtree rank ranges not contiguous; order is not a DFS post-order")

    def build_node(root: int) -> SeparatorDecomposition:
        node = SeparatorDecomposition(0, 0, 0)
        work = [(root, node)]
        while work:
            sub_root, out = work.pop()
            lo = sub_root - size[sub_root] + 1
            v = sub_root
            while len(children[v]) == 1:
                c = children[v][0]
                if c != v - 1:
                    raise ConsistencyError(
                        "separator path not contiguous; order is not a DFS post-order")
                v = c
            if not children[v]:
                out.cell_lo, out.cell_hi, out.sep_lo = lo, sub_root + 1, lo
                continue
            out.cell_lo, out.cell_hi, out.sep_lo = lo, sub_root + 1, v
            check_tiling(lo, v, children[v])
            for c in children[v]:
                child_node = SeparatorDecomposition(0, 0, 0)
                out.children.append(child_node)
                work.append((c, child_node))
        return node

    if not roots:
        raise ConsistencyError("empty elimination tree")
    if len(roots) == 1:
        root_node = build_node(roots[0])
        if root_node.cell_hi - root_node.cell_lo != n:
            raise ConsistencyError("root subtree does not span all ranks")
        return root_node
    check_tiling(0, n, roots)
    top = SeparatorDecomposition(0, n, n)
    for r in roots:
        top.children.append(build_node(r))
    return top


@dataclass
class Cch:
    """Everything the metric-independent phase produces.

    ``order`` is the improved (DFS post-order) ranking the hierarchy was
    contracted with; ``initial_order`` keeps the dissection order and its
    recorded decomposition (rank ranges in its own rank space) when the
    order was computed rather than imported.
    """

    ug: UpwardGraph
    parent: list[int]
    decomposition: SeparatorDecomposition
    order: RankOrder
    initial_order: RankOrder | None = None


def build_cch(g: InputGraph, coords=None, order: RankOrder | None = None,
              cell_cutoff: int = 8) -> Cch:
    """Full preprocessing pipeline for an input graph.

    Computes (or takes) a nested dissection order, contracts once to get
    the elimination tree, improves the order to a DFS post-order of that
    tree, and contracts again under the improved order. The separator
    decomposition is reconstructed from the final tree.
    """
    if order is None:
        if coords is None:
            raise ConsistencyError("need coordinates to compute an order, or an explicit order")
        order = nested_dissection_order(g, coords, cell_cutoff=cell_cutoff)
    initial_tree = build_elimination_tree(contract(permute_to_rank_ids(g, order)))
    improved = dfs_postorder_reorder(order, initial_tree)
    ug = contract(permute_to_rank_ids(g, improved))
    parent = build_elimination_tree(ug)
    decomposition = reconstruct_separator_decomposition(parent)
    return Cch(ug=ug, parent=parent, decomposition=decomposition, order=improved,
               initial_order=order)


def _encode_u32(values, signed_sentinel: bool = False) -> bytes:
    if signed_sentinel:
        values = [v & 0xFFFFFFFF for v in values]
    arr = array("I", values)
    if arr.itemsize != 4:  # pragma: no cover - exotic platforms
        return struct.pack(f"<{len(values)}I", *values)
    if sys.byteorder != "little":  # pragma: no cover
        arr.byteswap()
    return arr.tobytes()


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, count: int) -> bytes:
        end = self.pos + count
        if end > len(self.data):
            raise FormatError("truncated artifact")
        chunk = self.data[self.pos:end]
        self.pos = end
        return chunk

    def u32s(self, count: int, signed_sentinel: bool = False) -> list[int]:
        arr = array("I")
        arr.frombytes(self.take(4 * count))
        if sys.byteorder != "little":  # pragma: no cover
            arr.byteswap()
        if signed_sentinel:
            return [v if v != 0xFFFFFFFF else -1 for v in arr]
        return list(arr)


def _flatten_decomposition(root: SeparatorDecomposition) -> list[int]:
    flat: list[int] = []
    for node in root.preorder():
        flat.extend((node.cell_lo, node.cell_hi, node.sep_lo, len(node.children)))
    return flat


def _unflatten_decomposition(flat: list[int]) -> SeparatorDecomposition:
    pos = 0

    def read_node() -> SeparatorDecomposition:
        nonlocal pos
        if pos + 4 > len(flat):
            raise FormatError("truncated separator decomposition")
        lo, hi, sep_lo, n_children = flat[pos:pos + 4]
        pos += 4
        node = SeparatorDecomposition(lo, hi, sep_lo)
        stack = [(node, n_children)]
        while stack:
            parent_node, remaining = stack.pop()
            if remaining == 0:
                continue
            stack.append((parent_node, remaining - 1))
            if pos + 4 > len(flat):
                raise FormatError("truncated separator decomposition")
            c_lo, c_hi, c_sep, c_children = flat[pos:pos + 4]
            pos += 4
            child = SeparatorDecomposition(c_lo, c_hi, c_sep)
            parent_node.children.append(child)
            stack.append((child, c_children))
        return node

    node = read_node()
    if pos != len(flat):
        raise FormatError("trailing data after separator decomposition")
    return node


def save_cch(cch: Cch, path: str) -> None:
    """Serialize the preprocessing artifact (little-endian u32 arrays)."""
    with open(path, "wb") as f:
        f.write(serialize_cch(cch))


def serialize_cch(cch: Cch) -> bytes:
    ug = cch.ug
    n, m = ug.vertex_count, ug.arc_count
    flat = _flatten_decomposition(cch.decomposition)
    parts = [MAGIC, bytes([VERSION])]
    parts.append(_encode_u32([n, m, ug.input_arc_count, len(flat) // 4]))
    parts.append(_encode_u32(ug.first_arc))
    parts.append(_encode_u32(ug.head))
    parts.append(_encode_u32(ug.tail))
    parts.append(_encode_u32(cch.parent, signed_sentinel=True))
    parts.append(_encode_u32(cch.order.vertex_at))
    parts.append(_encode_u32(ug.orig_up, signed_sentinel=True))
    parts.append(_encode_u32(ug.orig_down, signed_sentinel=True))
    parts.append(_encode_u32(flat))
    return b"".join(parts)


def load_cch(path: str) -> Cch:
    with open(path, "rb") as f:
        return deserialize_cch(f.read())


def deserialize_cch(data: bytes, reader: _Reader | None = None) -> Cch:
    r = reader if reader is not None else _Reader(data)
    if r.take(4) != MAGIC:
        raise FormatError("bad magic; not a preprocessing artifact")
    version = r.take(1)[0]
    if version != VERSION:
        raise FormatError(f"unsupported artifact version {version}")
    n, m, input_arc_count, node_count = r.u32s(4)
    first_arc = r.u32s(n + 1)
    head = r.u32s(m)
    tail = r.u32s(m)
    parent = r.u32s(n, signed_sentinel=True)
    vertex_at = r.u32s(n)
    orig_up = r.u32s(m, signed_sentinel=True)
    orig_down = r.u32s(m, signed_sentinel=True)
    flat = r.u32s(4 * node_count)
    if reader is None and r.pos != len(r.data):
        raise FormatError("trailing bytes in artifact")

    down_first = [0] * (n + 1)
    for h in head:
        down_first[h + 1] += 1
    for v in range(n):
        down_first[v + 1] += down_first[v]
    down_arc = [0] * m
    cursor = list(down_first)
    for e in range(m):
        h = head[e]
        down_arc[cursor[h]] = e
        cursor[h] += 1

    ug = UpwardGraph(n, first_arc, head, tail, down_first, down_arc,
                     orig_up=orig_up, orig_down=orig_down,
                     input_arc_count=input_arc_count)
    order = RankOrder.from_vertex_at(vertex_at)
    decomposition = _unflatten_decomposition(flat)
    return Cch(ug=ug, parent=parent, decomposition=decomposition, order=order)
