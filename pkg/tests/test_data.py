import numpy as np
import pytest

from segraph.data import Dataset, load_csv, save_csv, standardize
from segraph.errors import DataError, UsageError


class TestDataset:
    def test_basic_properties(self):
        d = Dataset(np.arange(6.0).reshape(3, 2), ("a", "b"))
        assert (d.n, d.d) == (3, 2)
        assert d.column_names == ("a", "b")

    def test_values_read_only(self):
        d = Dataset(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            d.values[0, 0] = 1.0

    def test_shape_validation(self):
        with pytest.raises(DataError):
            Dataset(np.zeros((1, 3)))
        with pytest.raises(DataError):
            Dataset(np.zeros((3, 1)))
        with pytest.raises(DataError):
            Dataset(np.zeros(4))

    def test_nonfinite_rejected(self):
        X = np.zeros((3, 2))
        X[1, 1] = np.nan
        with pytest.raises(DataError):
            Dataset(X)
        X[1, 1] = np.inf
        with pytest.raises(DataError):
            Dataset(X)

    def test_subset_rows(self):
        d = Dataset(np.arange(8.0).reshape(4, 2))
        sub = d.subset_rows([0, 3])
        assert np.array_equal(sub.values, [[0.0, 1.0], [6.0, 7.0]])


class TestCsvRoundTrip:
    def test_exact_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        d = Dataset(rng.standard_normal((5, 3)), ("u", "v", "w"))
        path = tmp_path / "x.csv"
        save_csv(d, path)
        back = load_csv(path)
        assert np.array_equal(back.values, d.values)
        assert back.column_names == d.column_names

    def test_error_names_cell(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n3,four\n")
        with pytest.raises(DataError, match="line 3.*'b'"):
            load_csv(path)

    def test_ragged_row_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n3\n")
        with pytest.raises(DataError, match="line 3"):
            load_csv(path)

    def test_empty_and_tiny_files_rejected(self, tmp_path):
        path = tmp_path / "e.csv"
        path.write_text("")
        with pytest.raises(DataError, match="empty"):
            load_csv(path)
        path.write_text("a,b\n")
        with pytest.raises(DataError):
            load_csv(path)
        path.write_text("a,b\n1,2\n")
        with pytest.raises(DataError, match="at least 2"):
            load_csv(path)

    def test_missing_file_is_data_error(self, tmp_path):
        with pytest.raises(DataError):
            load_csv(tmp_path / "nope.csv")


class TestStandardize:
    def test_center_and_scale(self):
        rng = np.random.default_rng(1)
        d = Dataset(rng.standard_normal((20, 3)) * 5 + 2)
        out = standardize(d, center=True, scale=True)
        assert np.allclose(out.values.mean(axis=0), 0.0, atol=1e-12)
        assert np.allclose(out.values.std(axis=0), 1.0, atol=1e-12)

    def test_constant_column_rejected_when_scaling(self):
        X = np.ones((5, 2))
        X[:, 1] = np.arange(5.0)
        with pytest.raises(UsageError):
            standardize(Dataset(X), center=True, scale=True)
        # centering alone is fine
        standardize(Dataset(X), center=True, scale=False)
