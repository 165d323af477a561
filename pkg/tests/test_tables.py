import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cdkernels.tables import KernelTable, format_float

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


def _table(matrix=False):
    grid = [(0j, 0j), (1 + 0.5j, -2j)]
    vals = np.arange(8, dtype=complex).reshape(2, 2, 2) * (1 - 0.25j) if matrix else np.array([1 + 0j, -0.5 + 2j])
    return KernelTable(0.25, 3.0, 40.0, grid, vals, "free-jacobi", {"sup_error": 0.1})


def test_format_float():
    assert format_float(-0.0) == "0.0"
    assert format_float(0.1) == "0.1"
    assert format_float(1 / 3) == "0.3333333333333333"


@given(finite)
def test_format_roundtrip(x):
    s = format_float(x)
    assert float(s) == x
    assert len(s.replace("-", "").replace(".", "").split("e")[0].lstrip("0")) <= 17


@pytest.mark.parametrize("matrix", [False, True])
def test_csv_roundtrip(matrix):
    t = _table(matrix)
    text = t.to_csv()
    assert text.splitlines()[0].startswith("re_z,im_z,re_w,im_w")
    back = KernelTable.from_csv(text, t.xi, t.scale, t.index, t.model_id)
    assert np.array_equal(back.values, t.values)
    assert back.grid == t.grid


@pytest.mark.parametrize("matrix", [False, True])
def test_json_roundtrip(matrix):
    t = _table(matrix)
    back = KernelTable.from_json(t.to_json())
    assert np.array_equal(back.values, t.values)
    assert back.meta == t.meta and back.is_matrix == matrix


def test_writes_files(tmp_path):
    t = _table()
    t.to_csv(tmp_path / "a.csv")
    t.to_json(tmp_path / "a.json")
    assert (tmp_path / "a.csv").read_text() == t.to_csv()


def test_validation():
    with pytest.raises(ValueError):
        KernelTable(0.0, 1.0, 1.0, [(0j, 0j)], np.zeros(2), "m")
    with pytest.raises(ValueError):
        KernelTable(0.0, 0.0, 1.0, [(0j, 0j)], np.zeros(1), "m")
