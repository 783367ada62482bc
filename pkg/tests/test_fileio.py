import numpy as np
import pytest

from jointscale import InvalidInput
from jointscale import fileio


class TestMatrixRoundTrip:
    def test_bit_exact_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        m = rng.standard_normal((7, 5)) * np.exp(rng.uniform(-20, 20, (7, 5)))
        path = tmp_path / "m.csv"
        fileio.write_matrix(path, m)
        back = fileio.read_matrix(path)
        assert np.array_equal(back, m)

    def test_tsv_delimiter(self, tmp_path):
        m = np.array([[1.5, 2.25], [3.0, -4.125]])
        path = tmp_path / "m.tsv"
        fileio.write_matrix(path, m, delimiter="\t")
        assert np.array_equal(fileio.read_matrix(path, delimiter="\t"), m)

    def test_header_skipping(self, tmp_path):
        path = tmp_path / "h.csv"
        path.write_text("a,b\n1,2\n3,4\n")
        m = fileio.read_matrix(path, header=True)
        assert np.array_equal(m, [[1, 2], [3, 4]])

    def test_parse_error_mentions_file(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2\n3,oops\n")
        with pytest.raises(InvalidInput, match="bad.csv"):
            fileio.read_matrix(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InvalidInput):
            fileio.read_matrix(tmp_path / "absent.csv")

    def test_single_row_kept_2d(self, tmp_path):
        path = tmp_path / "row.csv"
        fileio.write_matrix(path, np.array([[1.0, 2.0, 3.0]]))
        assert fileio.read_matrix(path).shape == (1, 3)

    def test_embedding_round_trip_with_index_column(self, tmp_path):
        z = np.random.default_rng(2).standard_normal((6, 3))
        path = tmp_path / "z.csv"
        fileio.write_embedding(path, z)
        assert path.read_text().splitlines()[0].startswith("0,")
        assert np.array_equal(fileio.read_embedding(path), z)

    def test_embedding_reader_rejects_plain_matrix(self, tmp_path):
        path = tmp_path / "z.csv"
        fileio.write_matrix(path, np.random.default_rng(3).standard_normal((4, 2)))
        with pytest.raises(InvalidInput, match="row-index"):
            fileio.read_embedding(path)


class TestEdgeList:
    def test_round_trip(self, tmp_path):
        edges = [(0, 1, 1.0), (1, 2, 0.5), (0, 3, 2.25)]
        path = tmp_path / "g.txt"
        fileio.write_edge_list(path, edges)
        back, n = fileio.read_edge_list(path)
        assert back == edges
        assert n == 4

    def test_default_weight_and_comments(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("# a comment\n0 1\n\n1 2 3.5\n")
        edges, n = fileio.read_edge_list(path)
        assert edges == [(0, 1, 1.0), (1, 2, 3.5)]
        assert n == 3

    def test_bad_line_number_reported(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("0 1\nnot an edge line at all\n")
        with pytest.raises(InvalidInput, match=":2"):
            fileio.read_edge_list(path)

    def test_negative_id_rejected(self, tmp_path):
        path = tmp_path / "g.txt"
        path.write_text("-1 2\n")
        with pytest.raises(InvalidInput):
            fileio.read_edge_list(path)


class TestCouplingTriplets:
    def test_round_trip_with_shape(self, tmp_path):
        p = np.zeros((3, 4))
        p[0, 1] = 0.5
        p[2, 3] = 0.25
        path = tmp_path / "p.txt"
        fileio.write_coupling_triplets(path, p)
        assert np.array_equal(fileio.read_coupling_triplets(path), p)

    def test_drops_tiny_entries(self, tmp_path):
        p = np.array([[1e-15, 0.5], [0.5, 1e-13]])
        path = tmp_path / "p.txt"
        fileio.write_coupling_triplets(path, p)
        back = fileio.read_coupling_triplets(path)
        assert back[0, 0] == 0.0
        assert back[1, 1] == 0.0
        assert back[0, 1] == 0.5


class TestLabelsAndTrace:
    def test_labels_round_trip(self, tmp_path):
        labels = np.array([0, 2, 1, 2])
        path = tmp_path / "labels.csv"
        fileio.write_labels(path, labels)
        assert np.array_equal(fileio.read_labels(path), labels)

    def test_trace_jsonl(self, tmp_path):
        path = tmp_path / "trace.jsonl"
        fileio.write_trace(path, [{"iter": 0, "stress": 1.5}, {"iter": 1, "stress": 0.5}])
        lines = path.read_text().splitlines()
        assert len(lines) == 2
        assert '"iter": 0' in lines[0]

    def test_json_atomic_write(self, tmp_path):
        path = tmp_path / "doc.json"
        fileio.write_json(path, {"b": 1, "a": 2})
        text = path.read_text()
        assert text.index('"a"') < text.index('"b"')
        assert not (tmp_path / "doc.json.tmp").exists()

    def test_sha256_stable(self, tmp_path):
        path = tmp_path / "f.bin"
        path.write_bytes(b"hello")
        assert fileio.sha256_file(path) == (
            "2cf24dba5fb0a30e26e83b2ac5b9e29e1b161e5c1fa7425e73043362938b9824"
        )
