import json

import numpy as np
import pytest

from jointscale import fileio, pairwise_euclidean
from jointscale.cli import main


def run_cli(args):
    return main([str(a) for a in args])


def write_points(path, pts):
    fileio.write_matrix(path, pts)
    return path


class TestEmbed:
    def test_collinear_distances_dim1(self, tmp_path):
        d = pairwise_euclidean(np.array([[0.0], [1.0], [2.0]]))
        src = tmp_path / "d.csv"
        fileio.write_matrix(src, d)
        out = tmp_path / "out"
        # seed chosen in the exact-recovery basin; 1-D stress has local minima
        code = run_cli(["embed", src, "--kind", "distances", "--dim", "1",
                        "--seed", "4", "--out", out])
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["summary"]["relative_stress"] <= 1e-8
        z = fileio.read_embedding(out / "embedding.csv")
        assert z.shape == (3, 1)

    def test_dim_zero_usage_error(self, tmp_path):
        src = write_points(tmp_path / "x.csv",
                           np.random.default_rng(0).standard_normal((5, 2)))
        code = run_cli(["embed", src, "--dim", "0", "--out", tmp_path / "o"])
        assert code != 0

    def test_seed_determinism(self, tmp_path):
        src = write_points(tmp_path / "x.csv",
                           np.random.default_rng(1).standard_normal((12, 3)))
        out1, out2 = tmp_path / "a", tmp_path / "b"
        for out in (out1, out2):
            assert run_cli(["embed", src, "--dim", "2", "--seed", "7",
                            "--out", out]) == 0
        assert (out1 / "embedding.csv").read_bytes() == (out2 / "embedding.csv").read_bytes()

    def test_geodesic_flag(self, tmp_path):
        theta = np.linspace(0, 2 * np.pi, 24, endpoint=False)
        pts = np.column_stack([np.cos(theta), np.sin(theta)])
        src = write_points(tmp_path / "circle.csv", pts)
        out = tmp_path / "out"
        assert run_cli(["embed", src, "--dim", "2", "--geodesic", "2",
                        "--rescale-mean", "--seed", "0", "--out", out]) == 0
        assert (out / "trace.jsonl").exists()


class TestJoint:
    def test_self_match_node_correctness(self, tmp_path):
        rng = np.random.default_rng(2)
        d = pairwise_euclidean(rng.standard_normal((30, 2)))
        src = tmp_path / "d.csv"
        fileio.write_matrix(src, d)
        out = tmp_path / "out"
        code = run_cli(["joint", src, src, "--kind", "distances", "--dim", "2",
                        "--lambda", "0.1", "--epsilon", "0.1", "--iters", "80",
                        "--inner-wp", "5", "--inner-smacof", "25", "--restarts", "2",
                        "--seed", "0", "--gw-init", "--lambda-anneal",
                        "--truth", "identity", "--out", out])
        assert code == 0
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["node_correctness"] >= 0.9
        assert metrics["foscttm"] <= 0.05

    def test_missing_second_input(self, tmp_path):
        src = write_points(tmp_path / "x.csv", np.zeros((3, 2)))
        with pytest.raises(SystemExit):
            run_cli(["joint", src, "--out", tmp_path / "o"])

    def test_determinism_bitwise(self, tmp_path):
        rng = np.random.default_rng(3)
        x1 = rng.standard_normal((15, 4))
        x2 = rng.standard_normal((15, 6))
        s1 = write_points(tmp_path / "x1.csv", x1)
        s2 = write_points(tmp_path / "x2.csv", x2)
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert run_cli(["joint", s1, s2, "--dim", "2", "--iters", "4",
                            "--restarts", "2", "--seed", "11", "--out", out]) == 0
            outs.append(out)
        for fname in ("z1.csv", "z2.csv", "coupling.csv", "trace.jsonl"):
            assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()

    def test_labels_trigger_transfer_metrics(self, tmp_path):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((20, 3))
        s1 = write_points(tmp_path / "x1.csv", x)
        s2 = write_points(tmp_path / "x2.csv", x + 0.01 * rng.standard_normal((20, 3)))
        labels = rng.integers(0, 2, 20)
        fileio.write_labels(tmp_path / "l.csv", labels)
        out = tmp_path / "out"
        assert run_cli(["joint", s1, s2, "--iters", "4", "--restarts", "1",
                        "--labels1", tmp_path / "l.csv", "--labels2", tmp_path / "l.csv",
                        "--seed", "0", "--out", out]) == 0
        metrics = json.loads((out / "metrics.json").read_text())
        assert "transfer_accuracy" in metrics

    def test_sparse_coupling_output(self, tmp_path):
        rng = np.random.default_rng(5)
        d = pairwise_euclidean(rng.standard_normal((10, 2)))
        src = tmp_path / "d.csv"
        fileio.write_matrix(src, d)
        out = tmp_path / "out"
        assert run_cli(["joint", src, src, "--kind", "distances", "--iters", "3",
                        "--restarts", "1", "--seed", "0", "--sparse-coupling",
                        "--out", out]) == 0
        p = fileio.read_coupling_triplets(out / "coupling.txt")
        assert p.shape == (10, 10)

    def test_config_file_and_flag_precedence(self, tmp_path):
        rng = np.random.default_rng(6)
        d = pairwise_euclidean(rng.standard_normal((8, 2)))
        src = tmp_path / "d.csv"
        fileio.write_matrix(src, d)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"iters": 3, "restarts": 1, "seed": 5, "dim": 3}))
        out = tmp_path / "out"
        assert run_cli(["joint", src, src, "--kind", "distances",
                        "--config", cfg, "--dim", "2", "--out", out]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["dim"] == 2          # flag wins
        assert manifest["config"]["outer_iters"] == 3  # from JSON
        z1 = fileio.read_embedding(out / "z1.csv")
        assert z1.shape == (8, 2)


class TestMatch:
    @staticmethod
    def er_edges(n, p, rng):
        from scipy.sparse.csgraph import connected_components

        while True:
            mask = np.triu(rng.random((n, n)) < p, 1)
            adj = mask | mask.T
            if connected_components(adj.astype(int), directed=False)[0] == 1:
                return [(i, j) for i, j in zip(*np.nonzero(mask))]

    def test_er_self_matching(self, tmp_path):
        scores = []
        for seed in range(3):
            rng = np.random.default_rng(100 + seed)
            edges = self.er_edges(60, 0.15, rng)
            perm = rng.permutation(60)
            e1 = tmp_path / f"g1_{seed}.txt"
            e2 = tmp_path / f"g2_{seed}.txt"
            fileio.write_edge_list(e1, [(i, j, 1.0) for i, j in edges])
            fileio.write_edge_list(e2, [(perm[i], perm[j], 1.0) for i, j in edges])
            truth = tmp_path / f"truth_{seed}.csv"
            fileio.write_labels(truth, perm)
            out = tmp_path / f"out_{seed}"
            code = run_cli(["match", e1, e2, "--dim", "8", "--iters", "60",
                            "--inner-wp", "5", "--inner-smacof", "25",
                            "--restarts", "2", "--seed", str(seed),
                            "--truth", truth, "--out", out])
            assert code == 0
            metrics = json.loads((out / "metrics.json").read_text())
            scores.append(metrics["node_correctness"])
        assert np.median(scores) >= 0.9

    def test_self_loop_dropped_with_warning(self, tmp_path, capsys):
        e1 = tmp_path / "g1.txt"
        e2 = tmp_path / "g2.txt"
        edges = [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0), (1, 1, 1.0)]
        fileio.write_edge_list(e1, edges)
        fileio.write_edge_list(e2, edges[:3])
        out = tmp_path / "out"
        code = run_cli(["match", e1, e2, "--dim", "2", "--iters", "2",
                        "--restarts", "1", "--seed", "0", "--out", out])
        assert code == 0
        captured = capsys.readouterr()
        assert "self-loops" in captured.err
        assert (out / "matches.csv").exists()

    def test_disconnected_graph_reports_components(self, tmp_path, capsys):
        e1 = tmp_path / "g1.txt"
        fileio.write_edge_list(e1, [(0, 1, 1.0), (2, 3, 1.0)])
        out = tmp_path / "out"
        code = run_cli(["match", e1, e1, "--iters", "2", "--restarts", "1",
                        "--out", out])
        assert code != 0
        assert "components" in capsys.readouterr().err


class TestEval:
    def test_identical_embeddings_zero_foscttm(self, tmp_path):
        rng = np.random.default_rng(7)
        z = rng.standard_normal((10, 2))
        zf = tmp_path / "z.csv"
        fileio.write_embedding(zf, z)
        out = tmp_path / "out"
        assert run_cli(["eval", "--z1", zf, "--z2", zf, "--out", out]) == 0
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["foscttm"] == 0.0
        assert "node_correctness" in metrics["skipped"]

    def test_scaled_truth_coupling_full_correctness(self, tmp_path):
        n = 6
        perm = np.random.default_rng(8).permutation(n)
        p = np.zeros((n, n)); p[np.arange(n), perm] = 1 / n
        pf = tmp_path / "p.csv"
        fileio.write_matrix(pf, p)
        tf = tmp_path / "t.csv"
        fileio.write_labels(tf, perm)
        out = tmp_path / "out"
        assert run_cli(["eval", "--coupling", pf, "--truth", tf, "--out", out]) == 0
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["node_correctness"] == 1.0
        assert metrics["top3_accuracy"] == 1.0

    def test_rmsd_on_self_aligned_exact_instance(self, tmp_path):
        rng = np.random.default_rng(9)
        z = rng.standard_normal((12, 3))
        d = pairwise_euclidean(z)
        zf = tmp_path / "z.csv"
        fileio.write_embedding(zf, z)
        df = tmp_path / "d.csv"
        fileio.write_matrix(df, d)
        tf = tmp_path / "t.csv"
        fileio.write_labels(tf, np.arange(12))
        out = tmp_path / "out"
        assert run_cli(["eval", "--z1", zf, "--z2", zf, "--d1", df, "--d2", df,
                        "--truth", tf, "--out", out]) == 0
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["rmsd_d"] <= 1e-6


class TestGen:
    def test_swiss_roll_file_shapes(self, tmp_path):
        out = tmp_path / "out"
        assert run_cli(["gen", "--kind", "swiss_roll", "--n", "300", "--seed", "1",
                        "--out", out]) == 0
        x1 = fileio.read_matrix(out / "x1.csv")
        x2 = fileio.read_matrix(out / "x2.csv")
        assert x1.shape == (300, 1000)
        assert x2.shape == (300, 2000)
        assert fileio.read_labels(out / "labels.csv").shape == (300,)
        assert fileio.read_matrix(out / "latent.csv").shape == (300, 3)
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["kind"] == "swiss_roll"

    def test_repeated_seed_bitwise_identical(self, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert run_cli(["gen", "--kind", "bifurcation", "--n", "40",
                            "--p1", "10", "--p2", "12", "--seed", "3",
                            "--out", out]) == 0
            outs.append(out)
        for fname in ("x1.csv", "x2.csv", "labels.csv", "latent.csv"):
            assert (outs[0] / fname).read_bytes() == (outs[1] / fname).read_bytes()

    def test_n_zero_usage_error(self, tmp_path):
        assert run_cli(["gen", "--kind", "swiss_roll", "--n", "0",
                        "--out", tmp_path / "o"]) != 0


class TestSeedEnvFallback:
    def test_env_seed_used(self, tmp_path, monkeypatch):
        rng = np.random.default_rng(10)
        src = write_points(tmp_path / "x.csv", rng.standard_normal((8, 2)))
        out_env, out_flag = tmp_path / "e", tmp_path / "f"
        monkeypatch.setenv("JOINTSCALE_SEED", "21")
        assert run_cli(["embed", src, "--dim", "2", "--out", out_env]) == 0
        monkeypatch.delenv("JOINTSCALE_SEED")
        assert run_cli(["embed", src, "--dim", "2", "--seed", "21",
                        "--out", out_flag]) == 0
        assert (out_env / "embedding.csv").read_bytes() == (out_flag / "embedding.csv").read_bytes()
