import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gzk.datasets import (
    ball_uniform,
    blobs,
    ingest_csv,
    preprocess,
    smooth_regression,
    smooth_target,
    sphere_uniform,
    synthetic,
)
from gzk.errors import ConfigurationError, IngestionError


def _write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestIngest:
    def test_three_lines_with_label(self, tmp_path):
        ds = ingest_csv(_write(tmp_path, "1,0\n0,1\n0,0"), label_col=2)
        assert ds.X.shape == (2, 2)
        np.testing.assert_array_equal(ds.X, np.eye(2))
        np.testing.assert_array_equal(ds.y, [0.0, 0.0])

    def test_row_layout(self, tmp_path):
        text = "1,0,5\n0,1,6\n2,2,7\n"
        cols = ingest_csv(_write(tmp_path, text), label_col=2)
        rows = ingest_csv(_write(tmp_path, text), label_col=2, layout="rows")
        np.testing.assert_array_equal(cols.X, [[1, 0, 5], [0, 1, 6]])
        np.testing.assert_array_equal(cols.y, [2, 2, 7])
        np.testing.assert_array_equal(rows.X, [[1, 0, 2], [0, 1, 2]])
        np.testing.assert_array_equal(rows.y, [5, 6, 7])
        with pytest.raises(ConfigurationError):
            ingest_csv(_write(tmp_path, text), layout="diagonal")

    def test_header_skipped(self, tmp_path):
        ds = ingest_csv(_write(tmp_path, "a,b\n1,2\n3,4\n"), header=True, layout="rows")
        np.testing.assert_array_equal(ds.X, [[1, 3], [2, 4]])
        assert ds.y is None

    def test_blank_lines_ignored(self, tmp_path):
        assert ingest_csv(_write(tmp_path, "1,2\n\n3,4\n")).n == 2

    def test_ragged_row(self, tmp_path):
        with pytest.raises(IngestionError, match=r":3: expected 2 fields, found 3"):
            ingest_csv(_write(tmp_path, "1,2\n3,4\n5,6,7\n"))

    def test_non_numeric(self, tmp_path):
        with pytest.raises(IngestionError, match=r":2: non-numeric value 'x'"):
            ingest_csv(_write(tmp_path, "1,2\nx,4\n"))

    @pytest.mark.parametrize("token", ["nan", "inf", "-inf"])
    def test_non_finite(self, tmp_path, token):
        with pytest.raises(IngestionError, match=r":1: non-finite"):
            ingest_csv(_write(tmp_path, f"1,{token}\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestionError):
            ingest_csv(tmp_path / "absent.csv")

    def test_empty_file(self, tmp_path):
        with pytest.raises(IngestionError, match="no data rows"):
            ingest_csv(_write(tmp_path, ""))

    def test_label_column_range(self, tmp_path):
        with pytest.raises(IngestionError):
            ingest_csv(_write(tmp_path, "1,2\n"), label_col=5)

    def test_normalised_on_read(self, tmp_path):
        ds = ingest_csv(_write(tmp_path, "3\n4\n"), normalize="unit")
        np.testing.assert_allclose(ds.X[:, 0], [0.6, 0.8])
        assert ds.preprocessing == "unit"


class TestPreprocess:
    def test_unit(self):
        np.testing.assert_allclose(preprocess(np.array([[3.0], [4.0]]), "unit")[:, 0], [0.6, 0.8])

    def test_standardize(self):
        np.testing.assert_allclose(preprocess(np.array([[1.0, 3.0]]), "standardize"), [[-1.0, 1.0]])

    def test_constant_feature(self):
        np.testing.assert_array_equal(preprocess(np.array([[2.0, 2.0]]), "standardize"), [[0.0, 0.0]])

    def test_scale(self):
        np.testing.assert_array_equal(preprocess(np.ones((2, 2)), "scale", 0.5), 0.5 * np.ones((2, 2)))

    def test_zero_point_unit(self):
        with pytest.raises(IngestionError):
            preprocess(np.zeros((2, 1)), "unit")

    def test_unknown(self):
        with pytest.raises(ConfigurationError):
            preprocess(np.ones((1, 1)), "whiten")
        with pytest.raises(ConfigurationError):
            preprocess(np.ones((1, 1)), "scale", -1.0)

    @settings(max_examples=30)
    @given(st.integers(1, 5), st.integers(2, 20), st.integers(0, 2**32 - 1))
    def test_standardized_moments(self, d, n, seed):
        X = np.random.default_rng(seed).standard_normal((d, n))
        Y = preprocess(X, "standardize")
        np.testing.assert_allclose(Y.mean(axis=1), 0.0, atol=1e-12)
        np.testing.assert_allclose(Y.std(axis=1), 1.0, rtol=1e-10)


class TestGenerators:
    @pytest.mark.parametrize("name", ["blobs", "sphere-uniform", "ball-uniform", "smooth-regression"])
    def test_deterministic(self, name):
        a, b = synthetic(name, 50, 4, 7), synthetic(name, 50, 4, 7)
        assert np.array_equal(a.X, b.X)
        assert not np.array_equal(a.X, synthetic(name, 50, 4, 8).X)

    def test_sphere_norms(self):
        np.testing.assert_allclose(np.linalg.norm(sphere_uniform(30, 5, 1, 2.0).X, axis=0), 2.0)

    def test_ball_radius(self):
        ds = ball_uniform(500, 3, 2)
        assert ds.max_norm <= 1.0
        # Radial CDF r^d gives median radius 2^{-1/d}.
        assert np.median(np.linalg.norm(ds.X, axis=0)) == pytest.approx(0.5 ** (1 / 3), abs=0.05)

    def test_blobs_labels(self):
        ds = blobs(10, 3, 0, k=3)
        assert ds.labels.tolist() == [0, 1, 2, 0, 1, 2, 0, 1, 2, 0]
        centre0 = ds.X[:, ds.labels == 0].mean(axis=1)
        assert centre0[0] == pytest.approx(0.5, abs=0.1)

    def test_regression_noise(self):
        ds = smooth_regression(2000, 3, 4, noise=0.1)
        assert np.std(ds.y - smooth_target(ds.X)) == pytest.approx(0.1, rel=0.1)

    def test_unknown(self):
        with pytest.raises(ConfigurationError):
            synthetic("moons", 10, 2, 0)
        with pytest.raises(ConfigurationError):
            synthetic("blobs", 0, 2, 0)
