"""Contraction, elimination tree, decomposition reconstruction, artifacts."""

from __future__ import annotations

import random

import pytest

from cchroute import (Cch, ConsistencyError, FormatError, InputGraph,
                      RankOrder, build_cch, build_elimination_tree, contract,
                      dijkstra, load_cch, nested_dissection_order,
                      permute_to_rank_ids, reconstruct_separator_decomposition,
                      save_cch)
from helpers import (diamond, grid_graph, naive_elimination_arcs,
                     random_connected_graph, random_order)


class TestPermute:
    def test_identity(self):
        g = diamond()
        p = permute_to_rank_ids(g, RankOrder.identity(4))
        assert list(zip(p.tail, p.head, p.weight)) == list(zip(g.tail, g.head, g.weight))
        assert p.arc_origin == list(range(g.arc_count))

    def test_reversal_on_two_path(self):
        g = InputGraph.from_arcs(2, [(0, 1, 7)])
        order = RankOrder.from_vertex_at([1, 0])
        p = permute_to_rank_ids(g, order)
        assert (p.tail[0], p.head[0], p.weight[0]) == (1, 0, 7)

    def test_dijkstra_invariant_under_relabeling(self):
        rng = random.Random(17)
        for _ in range(6):
            g, _ = random_connected_graph(rng, 40)
            order = random_order(rng, 40)
            p = permute_to_rank_ids(g, order)
            for s in rng.sample(range(40), 4):
                d1 = dijkstra(g, s)
                d2 = dijkstra(p, order.rank_of[s])
                for v in range(40):
                    assert d1[v] == d2[order.rank_of[v]]


class TestContract:
    def test_diamond_adds_one_shortcut(self):
        ug = contract(diamond())
        assert set(zip(ug.tail, ug.head)) == {(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)}
        assert ug.arc_count == 5

    def test_clique_completion_around_low_vertex(self):
        # v=0 below w1..w4=1..4 with edges {w1,w4}, {w2,w3}, {w2,w4}
        edges = [(0, 1), (0, 2), (0, 3), (0, 4), (1, 4), (2, 3), (2, 4)]
        arcs = []
        for a, b in edges:
            arcs.append((a, b, 1))
            arcs.append((b, a, 1))
        ug = contract(InputGraph.from_arcs(5, arcs))
        got = set(zip(ug.tail, ug.head))
        shortcuts = got - {(min(a, b), max(a, b)) for a, b in edges}
        assert shortcuts == {(1, 2), (1, 3), (3, 4)}

    def test_path_has_zero_shortcuts(self):
        arcs = []
        for i in range(9):
            arcs.append((i, i + 1, 1))
            arcs.append((i + 1, i, 1))
        ug = contract(InputGraph.from_arcs(10, arcs))
        assert ug.arc_count == 9

    def test_matches_naive_elimination_game(self):
        rng = random.Random(23)
        for _ in range(40):
            n = rng.randint(2, 50)
            edges = set()
            for _ in range(rng.randint(n - 1, 3 * n)):
                a, b = rng.randrange(n), rng.randrange(n)
                if a != b:
                    edges.add((min(a, b), max(a, b)))
            arcs = []
            for a, b in edges:
                arcs.append((a, b, 1))
            g = InputGraph.from_arcs(n, arcs)
            order = random_order(rng, n)
            p = permute_to_rank_ids(g, order)
            ug = contract(p)
            want = naive_elimination_arcs(n, p.undirected_edges())
            assert set(zip(ug.tail, ug.head)) == want

    def test_deterministic(self):
        rng = random.Random(29)
        g, coords = random_connected_graph(rng, 60)
        order = nested_dissection_order(g, coords)
        p = permute_to_rank_ids(g, order)
        ug1, ug2 = contract(p), contract(p)
        assert ug1.head == ug2.head and ug1.first_arc == ug2.first_arc
        assert ug1.orig_up == ug2.orig_up and ug1.orig_down == ug2.orig_down

    def test_chordality_clique_property(self):
        rng = random.Random(37)
        for _ in range(10):
            n = rng.randint(5, 120)
            g, _ = random_connected_graph(rng, n)
            p = permute_to_rank_ids(g, random_order(rng, n))
            ug = contract(p)
            for u in range(n):
                heads = ug.head[ug.first_arc[u]:ug.first_arc[u + 1]]
                assert heads == sorted(set(heads))
                for i, a in enumerate(heads):
                    for b in heads[i + 1:]:
                        assert ug.arc_index(a, b) is not None, (u, a, b)

    def test_orig_arc_mapping(self):
        g = diamond()
        order = RankOrder.from_vertex_at([3, 2, 1, 0])
        p = permute_to_rank_ids(g, order)
        ug = contract(p)
        for i in range(ug.arc_count):
            u, v = ug.tail[i], ug.head[i]
            ou, od = ug.orig_up[i], ug.orig_down[i]
            if ou != -1:
                assert (order.rank_of[g.tail[ou]], order.rank_of[g.head[ou]]) == (u, v)
            if od != -1:
                assert (order.rank_of[g.tail[od]], order.rank_of[g.head[od]]) == (v, u)

    def test_down_incidence_consistent(self):
        rng = random.Random(41)
        g, coords = random_connected_graph(rng, 50)
        ug = contract(permute_to_rank_ids(g, nested_dissection_order(g, coords)))
        seen = set()
        for v in range(ug.vertex_count):
            for di in range(ug.down_first[v], ug.down_first[v + 1]):
                e = ug.down_arc[di]
                assert ug.head[e] == v
                seen.add(e)
        assert seen == set(range(ug.arc_count))


class TestEliminationTree:
    def test_diamond(self):
        ug = contract(diamond())
        assert build_elimination_tree(ug) == [1, 2, 3, -1]

    def test_edgeless(self):
        ug = contract(InputGraph.from_arcs(3, []))
        assert build_elimination_tree(ug) == [-1, -1, -1]

    def test_every_arc_joins_ancestors(self):
        rng = random.Random(43)
        for _ in range(8):
            n = rng.randint(5, 80)
            g, _ = random_connected_graph(rng, n)
            ug = contract(permute_to_rank_ids(g, random_order(rng, n)))
            parent = build_elimination_tree(ug)

            def is_ancestor(a, v):
                while v != -1:
                    if v == a:
                        return True
                    v = parent[v]
                return False

            for i in range(ug.arc_count):
                assert is_ancestor(ug.head[i], ug.tail[i])


class TestReconstruction:
    def test_path_tree_single_node(self):
        decomp = reconstruct_separator_decomposition([1, 2, 3, -1])
        assert (decomp.cell_lo, decomp.cell_hi, decomp.sep_lo) == (0, 4, 0)
        assert decomp.children == []

    def test_root_with_two_leaves(self):
        decomp = reconstruct_separator_decomposition([2, 2, -1])
        assert (decomp.cell_lo, decomp.cell_hi, decomp.sep_lo) == (0, 3, 2)
        assert [(c.cell_lo, c.cell_hi) for c in decomp.children] == [(0, 1), (1, 2)]

    def test_multiple_roots_get_synthetic_top(self):
        decomp = reconstruct_separator_decomposition([1, -1, 3, -1])
        assert (decomp.cell_lo, decomp.cell_hi, decomp.sep_lo) == (0, 4, 4)
        assert len(decomp.children) == 2

    def test_non_postorder_rejected(self):
        # rank 0 and 1 are both children of 3, but 2 hangs below 1:
        # subtree ranges {0} and {1,2}?? -> 2's subtree is {2}, parent 1 < 2 invalid
        with pytest.raises(ConsistencyError):
            reconstruct_separator_decomposition([3, 3, 1, -1])

    def test_grid_top_separator_matches_recorded(self):
        rng = random.Random(47)
        g, coords = grid_graph(rng, 6, 5)
        cch = build_cch(g, coords)
        rec = cch.initial_order.decomposition
        recorded = {cch.initial_order.vertex_at[r]
                    for r in range(rec.sep_lo, rec.cell_hi)}
        top = cch.decomposition
        reconstructed = {cch.order.vertex_at[r]
                         for r in range(top.sep_lo, top.cell_hi)}
        assert reconstructed <= recorded

    def test_reconstructed_separator_disconnects(self):
        rng = random.Random(53)
        for _ in range(5):
            g, coords = random_connected_graph(rng, rng.randint(20, 90))
            cch = build_cch(g, coords)
            top = cch.decomposition
            if not top.children:
                continue
            adj = g.undirected_adjacency()
            sep = {cch.order.vertex_at[r] for r in range(top.sep_lo, top.cell_hi)}
            label = {}
            for i, child in enumerate(top.children):
                for r in range(child.cell_lo, child.cell_hi):
                    label[cch.order.vertex_at[r]] = i
            for v, lab in label.items():
                for w in adj[v]:
                    if w in sep:
                        continue
                    assert label[w] == lab, (v, w)


class TestArtifacts:
    def _roundtrip(self, cch, tmp_path):
        path = tmp_path / "x.cchp"
        save_cch(cch, str(path))
        return load_cch(str(path)), path

    def test_diamond_round_trip(self, tmp_path):
        cch = build_cch(diamond(), order=RankOrder.identity(4))
        loaded, _ = self._roundtrip(cch, tmp_path)
        assert loaded.ug.head == cch.ug.head
        assert loaded.ug.first_arc == cch.ug.first_arc
        assert loaded.parent == cch.parent
        assert loaded.order.vertex_at == cch.order.vertex_at
        assert loaded.ug.orig_up == cch.ug.orig_up
        assert loaded.ug.orig_down == cch.ug.orig_down
        flat = [(n.cell_lo, n.cell_hi, n.sep_lo, len(n.children))
                for n in loaded.decomposition.preorder()]
        want = [(n.cell_lo, n.cell_hi, n.sep_lo, len(n.children))
                for n in cch.decomposition.preorder()]
        assert flat == want

    def test_corrupted_magic(self, tmp_path):
        cch = build_cch(diamond(), order=RankOrder.identity(4))
        _, path = self._roundtrip(cch, tmp_path)
        data = bytearray(path.read_bytes())
        data[0] ^= 0xFF
        path.write_bytes(bytes(data))
        with pytest.raises(FormatError):
            load_cch(str(path))

    def test_truncation_detected(self, tmp_path):
        cch = build_cch(diamond(), order=RankOrder.identity(4))
        _, path = self._roundtrip(cch, tmp_path)
        data = path.read_bytes()
        path.write_bytes(data[:len(data) - 5])
        with pytest.raises(FormatError):
            load_cch(str(path))

    def test_double_round_trip_byte_identical(self, tmp_path):
        rng = random.Random(59)
        g, coords = random_connected_graph(rng, 70)
        cch = build_cch(g, coords)
        p1 = tmp_path / "a.cchp"
        save_cch(cch, str(p1))
        loaded = load_cch(str(p1))
        p2 = tmp_path / "b.cchp"
        save_cch(Cch(ug=loaded.ug, parent=loaded.parent,
                     decomposition=loaded.decomposition, order=loaded.order), str(p2))
        assert p1.read_bytes() == p2.read_bytes()
