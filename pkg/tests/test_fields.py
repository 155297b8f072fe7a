import numpy as np
import pytest
from hypothesis import given, strategies as st

from polydbar.domain import build_disc_grid, tensor_grid
from polydbar.fields import (
    Form01Field,
    NotClosedError,
    ScalarField,
    inner,
    lp_norm,
    monomial_moments,
    region_mask,
)

G1 = tensor_grid(1, build_disc_grid(10, 20))
G2 = tensor_grid(2, build_disc_grid(8, 16))


def test_scalar_field_shape_checked():
    with pytest.raises(ValueError):
        ScalarField(G2, np.zeros((8, 16)))


def test_scalar_field_is_immutable():
    F = ScalarField(G1, np.ones(G1.shape))
    with pytest.raises(ValueError):
        F.values[0, 0] = 2


def test_arithmetic_and_grid_mismatch():
    F = ScalarField(G1, G1.points(0))
    assert np.allclose((2 * F - F).values, F.values)
    with pytest.raises(ValueError):
        F + ScalarField(tensor_grid(1, build_disc_grid(10, 24)), np.zeros((10, 24)))


def test_inner_and_norms():
    z = G1.points(0)
    F = ScalarField(G1, z)
    assert abs(inner(F, F) - np.pi / 2) < 1e-12
    assert abs(lp_norm(F, 2) - np.sqrt(np.pi / 2)) < 1e-12
    assert abs(lp_norm(ScalarField(G1, np.ones(G1.shape)), 4) - np.pi ** 0.25) < 1e-12
    assert lp_norm(F, np.inf) == pytest.approx(np.max(np.abs(z)))


def test_monomial_moments_of_conjugate_vanish():
    z1 = G2.broadcast(0, G2.points(0))
    z2 = G2.broadcast(1, G2.points(1))
    m = monomial_moments(ScalarField(G2, np.conj(z1) * z2 + 0 * z1), 4)
    assert m.shape == (5, 5)
    assert np.max(np.abs(m)) < 1e-13
    m = monomial_moments(ScalarField(G2, z2 + 0 * z1), 2)
    assert abs(m[0, 1] - np.pi * np.pi / 2) < 1e-12


def test_region_mask():
    mask = region_mask(G2, 0.5)
    r = G2.factors[0].radii
    assert mask.sum() == (np.count_nonzero(r <= 0.5) * 16) ** 2


def test_closed_form_accepted_and_broadcast():
    z1 = G2.broadcast(0, G2.points(0))
    z2 = G2.broadcast(1, G2.points(1))
    f = Form01Field(G2, [np.conj(z2), np.conj(z1)])
    assert f.closedness_residual < 1e-12
    assert f.coefficients[0].shape == G2.shape
    assert f.component(2).values.shape == G2.shape
    assert f.sup() == pytest.approx(float(np.max(np.abs(z1))))


def test_non_closed_form_rejected():
    z2 = G2.broadcast(1, G2.points(1))
    with pytest.raises(NotClosedError):
        Form01Field(G2, [np.conj(z2), np.zeros(G2.shape)])
    f = Form01Field(G2, [np.conj(z2), np.zeros(G2.shape)], closed=False)
    assert f.closedness_residual > 0.5


def test_wrong_component_count():
    with pytest.raises(ValueError):
        Form01Field(G2, [np.zeros(G2.shape)])


@given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_scaled_form_stays_closed(c):
    z1 = G2.broadcast(0, G2.points(0))
    z2 = G2.broadcast(1, G2.points(1))
    f = Form01Field(G2, [z1 * z2 * np.conj(z2), z1 * np.conj(z1) * z2])  # dbar of |z1 z2|^2
    g = f.scaled(c)
    assert np.allclose(g.coefficients[0], c * f.coefficients[0])
