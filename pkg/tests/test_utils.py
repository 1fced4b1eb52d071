"""Tests for sampling, point-set and serialization helpers."""

import json
from fractions import Fraction

import numpy as np
import pytest

from anticoncentration.utils.pointsets import integer_box, merge_points, sign_vertices, unique_points
from anticoncentration.utils.sampling import binomial_std_error, block_map, block_mean, block_sizes
from anticoncentration.utils.serialization import dumps, rows_to_csv, to_builtin, write_json


def _uniform(rng, size):
    return rng.random(size)


class TestSampling:
    """Tests for deterministic block Monte Carlo."""

    def test_block_sizes(self):
        assert block_sizes(10, 4) == [4, 4, 2]
        assert block_sizes(8, 4) == [4, 4]

    def test_independent_of_workers(self):
        """Test that the thread count never changes the draws."""
        one = block_map(_uniform, 10_000, seed=3, block_size=1000, max_workers=1)
        many = block_map(_uniform, 10_000, seed=3, block_size=1000, max_workers=8)
        assert all(np.array_equal(a, b) for a, b in zip(one, many))

    def test_seed_changes_draws(self):
        a = np.concatenate(block_map(_uniform, 2000, seed=1, block_size=500))
        b = np.concatenate(block_map(_uniform, 2000, seed=2, block_size=500))
        assert not np.array_equal(a, b)

    def test_block_mean(self):
        result = block_mean(_uniform, 50_000, seed=0)
        assert result.samples == 50_000
        assert abs(result.mean - 0.5) <= 5 * result.std_error

    def test_binomial_std_error(self):
        assert binomial_std_error(0.5, 100) == pytest.approx(0.05)
        assert binomial_std_error(0.5, 0) == 0.0


class TestPointSets:
    """Tests for merging and lattice helpers."""

    def test_merge_sums_weights(self):
        points = np.array([[0.0], [1e-12], [1.0], [2.0], [1.0 + 1e-12]])
        reps, weights = merge_points(points, np.array([0.1, 0.2, 0.3, 0.15, 0.25]), tol=1e-9)
        assert reps[:, 0].tolist() == [0.0, 1.0, 2.0]
        assert weights.tolist() == pytest.approx([0.3, 0.55, 0.15])

    def test_merge_chains(self):
        """Test that clusters are connected components of the closeness graph."""
        reps, weights = merge_points(np.array([[0.0], [0.6], [1.2]]), tol=1.0)
        assert reps.shape == (1, 1)
        assert weights.tolist() == [3.0]

    def test_unique_points(self):
        assert unique_points(np.array([[1.0, 1.0], [1.0, 1.0], [0.0, 1.0]])).shape == (2, 2)

    def test_integer_box(self):
        box = integer_box([1, 2])
        assert box.shape == (15, 2)
        assert box[0].tolist() == [-1, -2]
        assert integer_box([]).shape == (1, 0)

    def test_sign_vertices(self):
        vertices = sign_vertices(3)
        assert vertices.shape == (8, 3)
        assert len({tuple(v) for v in vertices.tolist()}) == 8


class TestSerialization:
    """Tests for stable documents and headline tables."""

    def test_to_builtin(self):
        document = to_builtin({"a": np.float64(1.5), "b": np.arange(3), "c": Fraction(1, 4), "d": np.bool_(True)})
        assert document == {"a": 1.5, "b": [0, 1, 2], "c": "1/4", "d": True}

    def test_sorted_keys(self):
        assert dumps({"b": 1, "a": 2}).index('"a"') < dumps({"b": 1, "a": 2}).index('"b"')

    def test_rows_to_csv_keeps_column_order(self):
        text = rows_to_csv([{"y": 2, "x": 1}], ["x", "y", "z"])
        assert text.splitlines() == ["x,y,z", "1,2,"]

    def test_write_json_creates_parents(self, tmp_path):
        path = tmp_path / "nested" / "doc.json"
        write_json(path, {"value": np.int64(3)})
        assert json.loads(path.read_text()) == {"value": 3}
        assert [p.name for p in path.parent.iterdir()] == ["doc.json"]
