import numpy as np
import pytest
from hypothesis import given, strategies as st

from polydbar.domain import build_disc_grid, load_chart, tensor_grid
from polydbar.fieldio import read_field, read_header, write_field
from polydbar.fields import Form01Field, ScalarField


def test_scalar_round_trip(tmp_path):
    T = tensor_grid(2, build_disc_grid(4, 8), load_chart("cardioid"))
    v = np.arange(np.prod(T.shape)).reshape(T.shape) * (1 + 2j)
    path = write_field(tmp_path / "s.field", ScalarField(T, v), label="S[f]")
    label, F = read_field(path)
    assert label == "S[f]"
    assert isinstance(F, ScalarField)
    assert F.grid == T
    assert np.array_equal(F.values, v)
    head = read_header(path)
    assert head["kind"] == "scalar" and head["n"] == 2 and head["components"] == 1


def test_one_factor_form_is_not_a_scalar(tmp_path):
    T = tensor_grid(1, build_disc_grid(6, 8))
    f = Form01Field(T, [np.ones(T.shape)])
    _, back = read_field(write_field(tmp_path / "f.field", f))
    assert isinstance(back, Form01Field)
    assert np.array_equal(back.coefficients[0], f.coefficients[0])


def test_rejects_foreign_and_truncated_files(tmp_path):
    bad = tmp_path / "bad.field"
    bad.write_bytes(b"hello\n{}\n")
    with pytest.raises(ValueError):
        read_field(bad)
    T = tensor_grid(1, build_disc_grid(4, 8))
    p = write_field(tmp_path / "t.field", ScalarField(T, np.ones(T.shape)))
    p.write_bytes(p.read_bytes()[:-16])
    with pytest.raises(ValueError):
        read_field(p)
    newer = tmp_path / "v9.field"
    newer.write_bytes(b"POLYDBAR-FIELD 9\n{}\n")
    with pytest.raises(ValueError):
        read_field(newer)


def test_write_rejects_other_types(tmp_path):
    with pytest.raises(TypeError):
        write_field(tmp_path / "x", np.zeros(3))


@given(st.lists(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False), min_size=32, max_size=32))
def test_round_trip_is_exact(tmp_path_factory, vals):
    T = tensor_grid(1, build_disc_grid(4, 8))
    path = tmp_path_factory.mktemp("rt") / "x.field"
    F = ScalarField(T, np.array(vals).reshape(T.shape))
    _, back = read_field(write_field(path, F))
    assert np.array_equal(back.values, F.values)
