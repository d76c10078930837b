"""Command-line interface: pipelines, determinism, exit codes."""

from __future__ import annotations

import json
import random

from cchroute import INFINITY, dijkstra, load_cch, load_customized
from cchroute.cli import main
from helpers import diamond, grid_graph


def write_instance(tmp_path, g, coords, prefix="g"):
    gr = tmp_path / f"{prefix}.gr"
    with open(gr, "w") as f:
        f.write(f"p sp {g.vertex_count} {g.arc_count}\n")
        for i in range(g.arc_count):
            f.write(f"a {g.tail[i] + 1} {g.head[i] + 1} {g.weight[i]}\n")
    co = tmp_path / f"{prefix}.co"
    with open(co, "w") as f:
        for v in range(g.vertex_count):
            f.write(f"v {v + 1} {coords.x[v]} {coords.y[v]}\n")
    return str(gr), str(co)


def diamond_files(tmp_path):
    from cchroute import Coordinates
    g = diamond()
    coords = Coordinates(x=[0, 0, 20, 20], y=[0, 10, 0, 10])
    return g, write_instance(tmp_path, g, coords, "diamond")


class TestPreprocessCmd:
    def test_artifact_passes_structural_invariants(self, tmp_path, capsys):
        rng = random.Random(211)
        g, coords = grid_graph(rng, 5, 6)
        gr, co = write_instance(tmp_path, g, coords)
        out = tmp_path / "x.cchp"
        assert main(["preprocess", "--graph", gr, "--coords", co, "--out", str(out)]) == 0
        cch = load_cch(str(out))
        ug = cch.ug
        for u in range(ug.vertex_count):
            heads = ug.head[ug.first_arc[u]:ug.first_arc[u + 1]]
            assert heads == sorted(set(heads))
            for i, a in enumerate(heads):
                for b in heads[i + 1:]:
                    assert ug.arc_index(a, b) is not None
        for u, p in enumerate(cch.parent):
            assert p == -1 or p > u

    def test_identity_order_honored(self, tmp_path, capsys):
        g, (gr, co) = diamond_files(tmp_path)
        order_file = tmp_path / "order.txt"
        order_file.write_text("0\n1\n2\n3\n")
        out = tmp_path / "d.cchp"
        assert main(["preprocess", "--graph", gr, "--order", str(order_file),
                     "--out", str(out)]) == 0
        cch = load_cch(str(out))
        # identity order is already a DFS post-order of the diamond's tree
        assert cch.order.vertex_at == [0, 1, 2, 3]
        assert cch.parent == [1, 2, 3, -1]

    def test_missing_file_exits_5(self, tmp_path, capsys):
        assert main(["preprocess", "--graph", str(tmp_path / "no.gr"),
                     "--coords", str(tmp_path / "no.co"),
                     "--out", str(tmp_path / "o")]) == 5

    def test_missing_coords_and_order_exits_3(self, tmp_path, capsys):
        g, (gr, _) = diamond_files(tmp_path)
        assert main(["preprocess", "--graph", gr, "--out", str(tmp_path / "o")]) == 3

    def test_decomposition_dump(self, tmp_path, capsys):
        rng = random.Random(223)
        g, coords = grid_graph(rng, 4, 5)
        gr, co = write_instance(tmp_path, g, coords)
        assert main(["preprocess", "--graph", gr, "--coords", co,
                     "--out", str(tmp_path / "o.cchp"), "--dump-decomposition"]) == 0
        out = capsys.readouterr().out
        assert "cell [0, 20)" in out


class TestCustomizeCmd:
    def test_thread_counts_and_reruns_byte_identical(self, tmp_path, capsys):
        rng = random.Random(227)
        g, coords = grid_graph(rng, 6, 6)
        gr, co = write_instance(tmp_path, g, coords)
        cchp = tmp_path / "g.cchp"
        main(["preprocess", "--graph", gr, "--coords", co, "--out", str(cchp)])
        outs = []
        for name, threads in (("a", "1"), ("b", "8"), ("c", "1")):
            out = tmp_path / f"{name}.cchm"
            assert main(["customize", "--graph", gr, "--cch", str(cchp),
                         "--out", str(out), "--threads", threads]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1] == outs[2]

    def test_no_perfect_marks_mode(self, tmp_path, capsys):
        g, (gr, co) = diamond_files(tmp_path)
        cchp, cchm = tmp_path / "d.cchp", tmp_path / "d.cchm"
        main(["preprocess", "--graph", gr, "--coords", co, "--out", str(cchp)])
        assert main(["customize", "--graph", gr, "--cch", str(cchp),
                     "--out", str(cchm), "--no-perfect"]) == 0
        c = load_customized(str(cchm))
        assert c.perfect is False and c.reduced is None

    def test_weight_graph_mismatch_exits_3(self, tmp_path, capsys):
        g, (gr, co) = diamond_files(tmp_path)
        cchp = tmp_path / "d.cchp"
        main(["preprocess", "--graph", gr, "--coords", co, "--out", str(cchp)])
        rng = random.Random(229)
        g2, coords2 = grid_graph(rng, 3, 3)
        gr2, _ = write_instance(tmp_path, g2, coords2, "other")
        assert main(["customize", "--graph", gr2, "--cch", str(cchp),
                     "--out", str(tmp_path / "x.cchm")]) == 3

    def test_json_timings(self, tmp_path, capsys):
        g, (gr, co) = diamond_files(tmp_path)
        cchp = tmp_path / "d.cchp"
        main(["preprocess", "--graph", gr, "--coords", co, "--out", str(cchp)])
        capsys.readouterr()
        assert main(["customize", "--graph", gr, "--cch", str(cchp),
                     "--out", str(tmp_path / "d.cchm"), "--json"]) == 0
        line = capsys.readouterr().out.strip().splitlines()[0]
        payload = json.loads(line)
        assert payload["kind"] == "customize"
        assert set(payload["seconds"]) == {"respect", "basic", "perfect", "construct", "total"}


class TestQueryCmd:
    def _pipeline(self, tmp_path, gr, co, extra=()):
        cchp, cchm = tmp_path / "q.cchp", tmp_path / "q.cchm"
        main(["preprocess", "--graph", gr, "--coords", co, "--out", str(cchp)])
        main(["customize", "--graph", gr, "--cch", str(cchp), "--out", str(cchm), *extra])
        return cchm

    def test_diamond_all_pairs_match_oracle(self, tmp_path, capsys):
        g, (gr, co) = diamond_files(tmp_path)
        for extra in ((), ("--no-perfect",)):
            cchm = self._pipeline(tmp_path, gr, co, extra)
            pairs = tmp_path / "pairs.txt"
            pairs.write_text("".join(f"{s} {t}\n" for s in range(4) for t in range(4)))
            capsys.readouterr()
            assert main(["query", "--customized", str(cchm), "--pairs", str(pairs)]) == 0
            lines = capsys.readouterr().out.strip().splitlines()
            assert len(lines) == 16
            for line in lines:
                s, t, d = line.split("\t")
                want = dijkstra(g, int(s))[int(t)]
                got = INFINITY if d == "inf" else int(d)
                assert got == want

    def test_paths_are_original_id_walks(self, tmp_path, capsys):
        g, (gr, co) = diamond_files(tmp_path)
        cchm = self._pipeline(tmp_path, gr, co)
        pairs = tmp_path / "pairs.txt"
        pairs.write_text("0 3\n")
        capsys.readouterr()
        main(["query", "--customized", str(cchm), "--pairs", str(pairs), "--paths"])
        line = capsys.readouterr().out.strip()
        s, t, d, path = line.split("\t")
        assert path.split() == ["0", "1", "3"] and d == "2"

    def test_malformed_batch_exits_2(self, tmp_path, capsys):
        g, (gr, co) = diamond_files(tmp_path)
        cchm = self._pipeline(tmp_path, gr, co)
        pairs = tmp_path / "pairs.txt"
        pairs.write_text("0\n")
        assert main(["query", "--customized", str(cchm), "--pairs", str(pairs)]) == 2

    def test_out_of_range_vertex_exits_3(self, tmp_path, capsys):
        g, (gr, co) = diamond_files(tmp_path)
        cchm = self._pipeline(tmp_path, gr, co)
        pairs = tmp_path / "pairs.txt"
        pairs.write_text("0 9\n")
        assert main(["query", "--customized", str(cchm), "--pairs", str(pairs)]) == 3


class TestKnnCmd:
    def test_sep_and_dijkstra_agree(self, tmp_path, capsys):
        rng = random.Random(233)
        g, coords = grid_graph(rng, 6, 7, one_way=0.2)
        gr, co = write_instance(tmp_path, g, coords)
        cchp, cchm = tmp_path / "k.cchp", tmp_path / "k.cchm"
        main(["preprocess", "--graph", gr, "--coords", co, "--out", str(cchp)])
        main(["customize", "--graph", gr, "--cch", str(cchp), "--out", str(cchm)])
        sources = tmp_path / "s.txt"
        sources.write_text("".join(f"{v}\n" for v in rng.sample(range(42), 6)))
        targets = tmp_path / "t.txt"
        targets.write_text("".join(f"{v}\n" for v in rng.sample(range(42), 9)))
        capsys.readouterr()
        assert main(["knn", "--customized", str(cchm), "--sources", str(sources),
                     "--targets", str(targets), "-k", "4", "--algo", "sep"]) == 0
        sep_out = capsys.readouterr().out
        assert main(["knn", "--customized", str(cchm), "--sources", str(sources),
                     "--targets", str(targets), "-k", "4", "--algo", "dijkstra"]) == 0
        dij_out = capsys.readouterr().out
        assert sep_out == dij_out and sep_out.strip()


class TestThreadResolution:
    def test_env_fallback(self, tmp_path, capsys, monkeypatch):
        from cchroute.cli import _resolve_threads
        monkeypatch.setenv("CCH_THREADS", "3")
        assert _resolve_threads(None) == 3
        assert _resolve_threads(2) == 2  # flag wins over the environment
        monkeypatch.setenv("CCH_THREADS", "zero")
        import pytest
        from cchroute import ConsistencyError
        with pytest.raises(ConsistencyError):
            _resolve_threads(None)


class TestBenchCmd:
    def test_same_seed_identical_output(self, tmp_path, capsys):
        rng = random.Random(239)
        g, coords = grid_graph(rng, 5, 8)
        gr, co = write_instance(tmp_path, g, coords)
        runs = []
        for _ in range(2):
            capsys.readouterr()
            assert main(["bench", "--graph", gr, "--coords", co,
                         "--seed", "5", "--count", "40", "--json"]) == 0
            lines = capsys.readouterr().out.strip().splitlines()
            payloads = [json.loads(line) for line in lines]
            runs.append([(p.get("s"), p.get("t"), p.get("distance"))
                         for p in payloads if p["kind"] == "sample"])
        assert runs[0] == runs[1]
        assert len(runs[0]) == 40

    def test_sample_distances_match_oracle(self, tmp_path, capsys):
        g, (gr, co) = diamond_files(tmp_path)
        capsys.readouterr()
        assert main(["bench", "--graph", gr, "--coords", co,
                     "--seed", "1", "--count", "30", "--json"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        for payload in map(json.loads, lines):
            if payload["kind"] != "sample":
                continue
            want = dijkstra(g, payload["s"])[payload["t"]]
            got = INFINITY if payload["distance"] is None else payload["distance"]
            assert got == want
