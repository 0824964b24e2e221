import numpy as np
import pandas as pd
import pytest

from phfit.common.exceptions import DocumentError

from .tables import read_table, write_table


def test_table_floats_read_back_exactly(tmp_path, rng):
    values = rng.uniform(0.0, 1.0, 2000)
    path = write_table(pd.DataFrame({"i": np.arange(values.size), "x": values}), tmp_path / "t.csv")
    frame = read_table(path, required=["i", "x"])
    np.testing.assert_array_equal(frame["x"].to_numpy(), values)


def test_table_extreme_magnitudes_read_back_exactly(tmp_path):
    values = np.array([1e-300, 2.0 / 3.0, 1e300, 123456789.123456789])
    path = write_table(pd.DataFrame({"x": values}), tmp_path / "t.csv")
    np.testing.assert_array_equal(read_table(path)["x"].to_numpy(), values)


def test_missing_column(tmp_path):
    path = write_table(pd.DataFrame({"x": [1.0]}), tmp_path / "t.csv")
    with pytest.raises(DocumentError, match="missing required columns"):
        read_table(path, required=["x", "y"])
