import numpy as np
import pytest

from plaggm.core.exceptions import DataError, DatasetFormatError
from plaggm.core.models import BaselineResult, ConfoundedDataset, FitPath, Method
from plaggm.domains.result_store import ResultStore
from plaggm.domains.simulation import simulate_dataset
from tests.conftest import path_from_supports


@pytest.fixture
def store(tmp_path):
    return ResultStore(tmp_path)


class TestDatasetFiles:
    def test_round_trip(self, store, small_dataset):
        store.write_dataset("data/dataset.csv", small_dataset)
        loaded = store.read_dataset("data/dataset.csv")
        assert np.array_equal(loaded.g, small_dataset.g)
        assert np.array_equal(loaded.Z, small_dataset.Z)

    def test_header(self, store, small_dataset, tmp_path):
        store.write_dataset("dataset.csv", small_dataset)
        assert (tmp_path / "dataset.csv").read_text().splitlines()[0] == "g,z1,z2,z3"

    def test_bad_field_reports_line(self, store, tmp_path):
        (tmp_path / "bad.csv").write_text("g,z1,z2\n0.0,1.0,2.0\n1.0,oops,3.0\n")
        with pytest.raises(DatasetFormatError) as excinfo:
            store.read_dataset("bad.csv")
        assert excinfo.value.line == 3
        assert "bad.csv:3" in str(excinfo.value)

    def test_wrong_field_count(self, store, tmp_path):
        (tmp_path / "short.csv").write_text("g,z1,z2\n0.0,1.0\n")
        with pytest.raises(DatasetFormatError) as excinfo:
            store.read_dataset("short.csv")
        assert excinfo.value.line == 2

    def test_bad_header(self, store, tmp_path):
        (tmp_path / "header.csv").write_text("x,z1,z2\n0.0,1.0,2.0\n")
        with pytest.raises(DatasetFormatError):
            store.read_dataset("header.csv")

    def test_missing_file_names_path(self, store):
        with pytest.raises(DataError) as excinfo:
            store.read_dataset("nowhere.csv")
        assert "nowhere.csv" in str(excinfo.value)

    def test_no_temp_files_left(self, store, small_dataset, tmp_path):
        store.write_dataset("dataset.csv", small_dataset)
        assert [p.name for p in tmp_path.iterdir()] == ["dataset.csv"]


class TestTruthFiles:
    def test_round_trip(self, store):
        _, truth = simulate_dataset(5, 100, np.random.default_rng(2))
        store.write_truth("truth.json", truth)
        loaded = store.read_truth("truth.json")
        assert np.array_equal(loaded.offdiag, truth.theta0.offdiag)
        assert np.array_equal(loaded.diag, truth.theta0.diag)

    def test_edges_are_one_based(self, store):
        _, truth = simulate_dataset(4, 100, np.random.default_rng(3))
        store.write_truth("truth.json", truth)
        edges = store.read_json("truth.json")["edges"]
        assert all(1 <= j < k <= 4 for j, k, _ in edges)

    def test_invalid_edge(self, store, tmp_path):
        (tmp_path / "truth.json").write_text('{"p": 2, "diag": [0, 0], "edges": [[1, 3, 0.5]]}')
        with pytest.raises(DatasetFormatError):
            store.read_truth("truth.json")

    def test_malformed_json_reports_line(self, store, tmp_path):
        (tmp_path / "broken.json").write_text('{\n"p": 2,\n"diag": [0, 0\n}')
        with pytest.raises(DatasetFormatError) as excinfo:
            store.read_truth("broken.json")
        assert excinfo.value.line is not None


class TestPathFiles:
    def test_write_read_write_is_stable(self, store, tmp_path):
        path = path_from_supports(3, [[0, 0, 0], [0.25, 0, 0], [0.5, -0.125, 0.75]])
        result = BaselineResult(method=Method.PLA, path=path, selected_lambda=2.0, notes={"bandwidth": "1"})
        store.write_path("a/path.json", result)
        store.write_path("b/path.json", store.read_path("a/path.json"))
        assert (tmp_path / "a/path.json").read_bytes() == (tmp_path / "b/path.json").read_bytes()

    def test_selected_estimate(self, store):
        path = path_from_supports(3, [[0, 0, 0], [0.25, 0, 0.5]])
        result = BaselineResult(method=Method.LR, path=path, selected_lambda=1.0)
        store.write_path("path.json", result)
        assert store.read_path("path.json").selected.offdiag.tolist() == [0.25, 0.0, 0.5]

    def test_empty_path(self, store):
        store.write_path("empty.json", BaselineResult(method=Method.CON, path=FitPath(points=[])))
        assert store.read_path("empty.json").path.points == []

    def test_selected_and_dense(self, store, tmp_path):
        theta = path_from_supports(3, [[0.5, 0.0, -0.25]]).points[0].theta
        store.write_selected("selected.json", theta, 0.1)
        assert store.read_selected("selected.json").offdiag.tolist() == [0.5, 0.0, -0.25]
        store.write_dense("selected.csv", theta)
        rows = (tmp_path / "selected.csv").read_text().splitlines()
        assert rows[0] == "z1,z2,z3"
        assert rows[1] == "0.0,0.5,0.0"


class TestJsonFiles:
    def test_sorted_keys(self, store, tmp_path):
        store.write_json("summary.json", {"b": 1, "a": {"z": 0.5, "c": True}})
        text = (tmp_path / "summary.json").read_text()
        assert text.index('"a"') < text.index('"b"')
        assert store.read_json("summary.json") == {"a": {"c": True, "z": 0.5}, "b": 1}

    def test_dataset_from_rows(self, store, tmp_path):
        ds = ConfoundedDataset(g=[0.0, 1.5], Z=[[1.0, 2.0], [3.0, 4.0]])
        store.write_dataset("two.csv", ds)
        assert (tmp_path / "two.csv").read_text() == "g,z1,z2\n0.0,1.0,2.0\n1.5,3.0,4.0\n"
