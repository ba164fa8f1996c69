"""Dataset directories and result tables."""

import csv
import math
from dataclasses import dataclass

import numpy as np
import pytest

from topoinfer import io
from topoinfer.experiments import ExperimentConfig, generate_instance


@dataclass
class Row:
    a: int
    b: float


class TestMatrices:
    def test_roundtrip_exact(self, tmp_path, rng):
        M = rng.standard_normal((4, 4))
        io.save_matrix(tmp_path / "m.csv", M)
        np.testing.assert_array_equal(io.load_matrix(tmp_path / "m.csv"), M)

    def test_corrupt(self, tmp_path):
        (tmp_path / "m.csv").write_text("1,2\nfoo,3\n")
        with pytest.raises(io.DataFormatError):
            io.load_matrix(tmp_path / "m.csv")

    def test_non_square_filter(self, tmp_path):
        io.save_matrix(tmp_path / "m.csv", np.ones((2, 3)))
        with pytest.raises(io.DataFormatError, match="square"):
            io.load_filter(tmp_path / "m.csv")

    def test_asymmetric_filter(self, tmp_path):
        io.save_matrix(tmp_path / "m.csv", np.array([[1.0, 2.0], [0.0, 1.0]]))
        with pytest.raises(io.DataFormatError):
            io.load_filter(tmp_path / "m.csv")


class TestDatasets:
    def test_pairs_roundtrip(self, tmp_path):
        cfg = ExperimentConfig("linear-io", graph={"kind": "er", "n": 6, "p": 0.5})
        inst = generate_instance(cfg, 0, 4, None)
        io.save_dataset(tmp_path, inst, cfg.to_dict())
        back = io.load_dataset(tmp_path)
        np.testing.assert_array_equal(back.X, inst.X)
        np.testing.assert_array_equal(back.filter.matrix, inst.filter.matrix)
        np.testing.assert_array_equal(back.shift.matrix, inst.shift.matrix)

    def test_covariance_roundtrip(self, tmp_path):
        cfg = ExperimentConfig("psd-karate")
        inst = generate_instance(cfg, 0, 5, 1000)
        io.save_dataset(tmp_path, inst)
        assert len(list(tmp_path.glob("cy_*.csv"))) == 5
        back = io.load_dataset(tmp_path)
        for p, q in zip(back.pairs, inst.pairs):
            np.testing.assert_array_equal(p.c_y_hat, q.c_y_hat)
            assert p.samples == 1000

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(io.DataFormatError, match="manifest"):
            io.load_manifest(tmp_path)

    def test_unknown_kind(self, tmp_path):
        io.write_json(tmp_path / io.MANIFEST, {"kind": "tensor"})
        with pytest.raises(io.DataFormatError, match="kind"):
            io.load_manifest(tmp_path)


class TestTables:
    def test_nan_is_empty(self, tmp_path):
        io.write_rows(tmp_path / "r.csv", [Row(1, math.nan), Row(2, 0.5)])
        rows = list(csv.reader(open(tmp_path / "r.csv")))
        assert rows == [["a", "b"], ["1", ""], ["2", "0.5"]]

    def test_empty(self, tmp_path):
        with pytest.raises(ValueError):
            io.write_rows(tmp_path / "r.csv", [])
