import numpy as np
import pytest
from hypothesis import given, strategies as st

from polydbar.corpus import corpus_forms
from polydbar.domain import build_disc_grid, load_chart, tensor_grid
from polydbar.fields import Form01Field, ScalarField, inner
from polydbar.operators import solve_canonical
from polydbar.oracle import (
    StaircaseError,
    TruncatedBasis,
    basis_projection,
    canonical_oracle,
    slice_dbar,
    staircase_solution,
)

T1 = tensor_grid(1, build_disc_grid(16, 32))
T2 = tensor_grid(2, build_disc_grid(12, 24))
Z = T1.points(0)
Z1 = T2.broadcast(0, T2.points(0))
Z2 = T2.broadcast(1, T2.points(1))
INTERIOR = np.s_[:-1]  # the outer ring of slice_dbar is undefined


def _interior(F):
    return F.values[INTERIOR]


def test_slice_dbar_examples():
    assert np.max(np.abs(_interior(slice_dbar(ScalarField(T1, np.conj(Z)), 1)) - 1)) < 1e-12
    assert np.max(np.abs(_interior(slice_dbar(ScalarField(T1, np.abs(Z) ** 2), 1)) - Z[INTERIOR])) < 1e-12
    assert np.max(np.abs(_interior(slice_dbar(ScalarField(T1, Z**2), 1)))) < 1e-12


def test_slice_dbar_cubic_within_stencil_tolerance():
    errs = []
    for n_r in (16, 32):
        T = tensor_grid(1, build_disc_grid(n_r, 2 * n_r))
        z = T.points(0)
        d = slice_dbar(ScalarField(T, z**3 + np.conj(z) ** 3), 1).values[:-1]
        errs.append(np.max(np.abs(d - 3 * np.conj(z[:-1]) ** 2)))
    assert errs[1] < errs[0] / 3  # second order
    assert errs[1] < 2e-2


def test_slice_dbar_two_slots():
    F = ScalarField(T2, np.conj(Z1) * Z2**2 + np.abs(Z2) ** 2)
    d2 = slice_dbar(F, 2).values[:, :, :-1]
    assert np.max(np.abs(d2 - np.broadcast_to(Z2, T2.shape)[:, :, :-1])) < 1e-12
    assert np.all(np.isnan(slice_dbar(F, 1).values[-1]))


def test_slice_dbar_on_mapped_chart():
    T = tensor_grid(1, build_disc_grid(16, 32), load_chart("mobius"))
    z = T.points(0)
    d = slice_dbar(ScalarField(T, np.abs(z) ** 2), 1).values[:-1]
    assert np.max(np.abs(d - z[:-1])) < 1e-10


def test_slice_dbar_rejects_coarse_grid():
    T = tensor_grid(1, build_disc_grid(3, 8))
    with pytest.raises(ValueError):
        slice_dbar(ScalarField(T, np.zeros(T.shape)), 1)
    with pytest.raises(IndexError):
        slice_dbar(ScalarField(T1, np.zeros(T1.shape)), 2)


@pytest.mark.parametrize("name", ["disc", "cardioid", "mobius"])
def test_gram_identity(name):
    g = build_disc_grid(64, 128)
    G = TruncatedBasis(12).gram(load_chart(name), g)
    assert np.max(np.abs(G - np.eye(13))) < 1e-8


def test_basis_projection_examples():
    B = TruncatedBasis(10)
    for a in range(11):
        assert np.max(np.abs(basis_projection(ScalarField(T1, Z**a), B).values - Z**a)) < 1e-8
    assert np.max(np.abs(basis_projection(ScalarField(T1, np.conj(Z)), B).values)) < 1e-12
    assert np.max(np.abs(basis_projection(ScalarField(T1, np.abs(Z) ** 2), B).values - 0.5)) < 1e-12


@given(st.integers(0, 10_000))
def test_projection_self_adjoint_and_idempotent(seed):
    rng = np.random.default_rng(seed)
    B = TruncatedBasis(6)

    def random_poly():
        v = np.zeros(T2.shape, dtype=complex)
        for _ in range(4):
            a, b, c, d = rng.integers(0, 4, 4)
            v = v + rng.normal() * Z1**a * np.conj(Z1) ** b * Z2**c * np.conj(Z2) ** d
        return ScalarField(T2, v)

    F, G = random_poly(), random_poly()
    PF, PG = basis_projection(F, B), basis_projection(G, B)
    assert abs(inner(PF, G) - inner(F, PG)) < 1e-8
    assert np.max(np.abs(basis_projection(PF, B).values - PF.values)) < 1e-8


def test_basis_degree_checked():
    with pytest.raises(ValueError):
        TruncatedBasis(-1)


def test_staircase_and_oracle_n1():
    f = Form01Field(T1, [np.ones(T1.shape)])
    assert np.max(np.abs(staircase_solution(f).values - np.conj(Z))) < 1e-12
    assert np.max(np.abs(canonical_oracle(f).values - np.conj(Z))) < 1e-12


def test_staircase_zero():
    f = Form01Field(T2, [np.zeros(T2.shape), np.zeros(T2.shape)])
    assert np.max(np.abs(staircase_solution(f).values)) == 0


def test_staircase_kerzman_structure_smooth():
    # f1(z2) dzbar1 + f2(z1) dzbar2 with holomorphic f_j: staircase is conj(z1) f1(z2) + conj(z2) f2(z1)
    cases = [
        (Z2**2 + 0 * Z1, 3 * Z1 - Z1**2 + 0 * Z2, 1e-12),
        (np.exp(Z2) + 0 * Z1, np.exp(-2 * Z1) + 0 * Z2, 1e-4),  # series truncation on 12x24
    ]
    for f1, f2, tol in cases:
        f = Form01Field(T2, [f1, f2], check=False)
        u = staircase_solution(f, check=False)
        assert np.max(np.abs(u.values - (np.conj(Z1) * f1 + np.conj(Z2) * f2))) < tol


def test_staircase_kerzman_inner_function_interior():
    T = tensor_grid(2, build_disc_grid(16, 64))
    desc = [d for d in corpus_forms("mollified", 2) if d.form_id == "kerzman-r0.9"][0]
    f = desc.to_field(T)
    u = staircase_solution(f)
    exact = desc.solution(T).evaluate(T)
    r = T.factors[0].radii <= 0.9
    sub = np.ix_(r, np.arange(64), r, np.arange(64))
    assert np.max(np.abs(u.values[sub] - exact[sub])) < 5e-3


def test_oracle_conj_product():
    f = Form01Field(T2, [np.conj(Z2) + 0 * Z1, np.conj(Z1) + 0 * Z2])
    assert np.max(np.abs(canonical_oracle(f).values - np.conj(Z1 * Z2))) < 1e-12


def test_oracle_matches_solver_on_polynomial_corpus():
    for desc in corpus_forms("polynomial", 2, seed=7, count=5):
        f = desc.to_field(T2)
        d = np.max(np.abs(canonical_oracle(f).values - solve_canonical(f).values))
        assert d < 5e-3


def test_oracle_matches_solver_on_mapped_chart():
    T = tensor_grid(1, build_disc_grid(48, 96), load_chart("cardioid"))
    z = T.points(0)
    f = Form01Field(T, [z * np.conj(z) + np.conj(z)])
    d = np.max(np.abs(canonical_oracle(f).values - solve_canonical(f).values))
    assert d < 5e-3


def test_oracle_truncation_sanity():
    for desc in corpus_forms("exact-gradient", 2, count=5):
        f = desc.to_field(T2)
        a = canonical_oracle(f, TruncatedBasis(10)).values
        b = canonical_oracle(f, TruncatedBasis(14)).values
        assert np.max(np.abs(a - b)) < 5e-3


def test_staircase_detects_unclosed_input():
    f = Form01Field(T2, [np.conj(Z2) + 0 * Z1, np.zeros(T2.shape)], closed=False)
    with pytest.raises(StaircaseError) as info:
        staircase_solution(f)
    assert info.value.slot in (1, 2)
    assert info.value.residual > info.value.tolerance


def test_oracle_output_orthogonal_to_basis():
    desc = corpus_forms("polynomial", 2, seed=1, count=1)[0]
    u = canonical_oracle(desc.to_field(T2))
    assert np.max(np.abs(basis_projection(u, TruncatedBasis(10)).values)) < 1e-10
