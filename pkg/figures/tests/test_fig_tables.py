import json

import numpy as np
import pytest

from cavifig.tables import (TableError, pivot, read_summary, read_table,
                            require_columns)


def write(path, text):
    path.write_text(text)
    return path


def test_read_table_roundtrip(tmp_path):
    p = write(tmp_path / "t.csv", "t,e_kin\n0.0,1.5\n0.5,1.25\n")
    table = read_table(p)
    assert list(table) == ["t", "e_kin"]      # header order kept
    np.testing.assert_allclose(table["t"], [0.0, 0.5])
    np.testing.assert_allclose(table["e_kin"], [1.5, 1.25])


def test_read_table_empty_file(tmp_path):
    p = write(tmp_path / "t.csv", "")
    with pytest.raises(TableError, match="empty"):
        read_table(p)


def test_read_table_header_only(tmp_path):
    p = write(tmp_path / "t.csv", "t,e_kin\n")
    with pytest.raises(TableError, match="no data rows"):
        read_table(p)


def test_read_table_bad_float(tmp_path):
    p = write(tmp_path / "t.csv", "t,e_kin\n0.0,oops\n")
    with pytest.raises(TableError, match="e_kin"):
        read_table(p)


def test_read_table_missing_file(tmp_path):
    with pytest.raises(TableError, match="cannot read"):
        read_table(tmp_path / "absent.csv")


def test_require_columns():
    table = {"a": np.zeros(1), "b": np.zeros(1)}
    require_columns(table, ("a", "b"))
    with pytest.raises(TableError, match="missing column"):
        require_columns(table, ("a", "c"), path="x.csv")


def test_read_summary_absent_is_empty(tmp_path):
    assert read_summary(tmp_path / "summary.json") == {}


def test_read_summary_roundtrip(tmp_path):
    p = tmp_path / "summary.json"
    p.write_text(json.dumps({"summary": {"t_snapshot": 2.0}}))
    assert read_summary(p)["summary"]["t_snapshot"] == 2.0


def test_read_summary_bad_json(tmp_path):
    p = write(tmp_path / "summary.json", "{nope")
    with pytest.raises(TableError):
        read_summary(p)


def test_pivot_row_major_grid():
    table = {
        "a": np.array([1.0, 1.0, 2.0, 2.0]),
        "b": np.array([10.0, 20.0, 10.0, 20.0]),
        "v": np.array([1.0, 2.0, 3.0, 4.0]),
    }
    v1, v2, grid = pivot(table, "a", "b", "v")
    np.testing.assert_allclose(v1, [1.0, 2.0])
    np.testing.assert_allclose(v2, [10.0, 20.0])
    np.testing.assert_allclose(grid, [[1.0, 2.0], [3.0, 4.0]])


def test_pivot_partial_scan_nan_fill():
    # a scan stopped after three of four cells: hole stays NaN
    table = {
        "a": np.array([1.0, 1.0, 2.0]),
        "b": np.array([10.0, 20.0, 10.0]),
        "v": np.array([1.0, 2.0, 3.0]),
    }
    _, _, grid = pivot(table, "a", "b", "v")
    assert np.isnan(grid[1, 1])
    np.testing.assert_allclose(grid[0], [1.0, 2.0])


def test_pivot_single_cell():
    table = {"a": np.array([5.0]), "b": np.array([7.0]),
             "v": np.array([42.0])}
    v1, v2, grid = pivot(table, "a", "b", "v")
    assert grid.shape == (1, 1) and grid[0, 0] == 42.0
