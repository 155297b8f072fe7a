import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from polydbar.corpus import (
    MOLLIFIER_RADII,
    SELECTORS,
    Separable,
    bump,
    bump_moment,
    corpus_forms,
    corpus_generate,
    disc_radius,
    inner_function,
    mollified_form,
)
from polydbar.domain import build_disc_grid, load_chart, tensor_grid
from polydbar.fields import lp_norm
from polydbar.operators import solve_canonical

T2 = tensor_grid(2, build_disc_grid(12, 24))
Z1 = T2.broadcast(0, T2.points(0))
Z2 = T2.broadcast(1, T2.points(1))


def test_selectors_and_errors():
    assert SELECTORS == ("polynomial", "exact-gradient", "kerzman-inner", "mollified")
    with pytest.raises(ValueError):
        corpus_forms("fractal", 2)
    with pytest.raises(ValueError):
        corpus_forms("polynomial", 4)
    with pytest.raises(ValueError):
        corpus_generate("kerzman-inner", 1, 0, tensor_grid(1, build_disc_grid(8, 16)))
    with pytest.raises(ValueError):
        corpus_generate("polynomial", 3, 0, T2)


def test_default_sizes():
    assert len(corpus_forms("polynomial", 2)) == 10
    assert len(corpus_forms("exact-gradient", 2)) == 10
    assert len(corpus_forms("kerzman-inner", 2)) == 1
    moll = corpus_forms("mollified", 2)
    assert len(moll) == 3 * 4
    assert {d.params["r"] for d in moll} == set(MOLLIFIER_RADII)


def test_corpus_is_seeded():
    a = corpus_forms("polynomial", 2, seed=4)
    b = corpus_forms("polynomial", 2, seed=4)
    c = corpus_forms("polynomial", 2, seed=5)
    assert [x.potential for x in a] == [x.potential for x in b]
    assert [x.potential for x in a] != [x.potential for x in c]


def test_exact_gradient_example():
    desc = corpus_forms("exact-gradient", 2)[0]
    assert desc.form_id == "grad-zb1zb2"
    f = desc.to_field(T2)
    assert np.max(np.abs(f.coefficients[0] - np.conj(Z2))) < 1e-15
    assert np.max(np.abs(f.coefficients[1] - np.conj(Z1))) < 1e-15
    assert f.closedness_residual < 1e-12
    assert np.max(np.abs(desc.solution(T2).evaluate(T2) - np.conj(Z1 * Z2))) < 1e-15


def test_zero_form_present():
    zero = [d for d in corpus_forms("exact-gradient", 2, count=7) if d.form_id == "grad-zero"][0]
    assert zero.to_field(T2).sup() == 0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_generated_forms_are_closed_with_known_answers(n):
    T = tensor_grid(n, build_disc_grid(6, 8) if n == 3 else build_disc_grid(10, 20))
    for f in corpus_generate("polynomial", n, 0, T, count=4):
        assert f.closedness_residual < 1e-10
        u = solve_canonical(f)
        assert np.max(np.abs(u.values - f.source.solution(T).evaluate(T))) < 1e-10


def test_known_answers_on_scaled_disc():
    T = tensor_grid(2, build_disc_grid(10, 20), load_chart("scaled2"))
    assert disc_radius(load_chart("scaled2")) == 2.0
    assert disc_radius(load_chart("cardioid")) is None
    for desc in corpus_forms("polynomial", 2, count=3):
        f = desc.to_field(T)
        assert np.max(np.abs(solve_canonical(f).values - desc.solution(T).evaluate(T))) < 1e-9
    assert corpus_forms("polynomial", 2)[0].solution(tensor_grid(2, build_disc_grid(6, 8), load_chart("cardioid"))) is None


def test_inner_function_bounded_with_sup_one():
    lam = np.sqrt(np.random.default_rng(0).random(5000)) * np.exp(2j * np.pi * np.random.default_rng(1).random(5000))
    assert np.max(np.abs(inner_function(lam))) <= 1
    assert abs(inner_function(-0.999999) - 1) < 1e-6
    assert inner_function(1.0) == 0


def test_kerzman_form_sup_one():
    desc = corpus_forms("kerzman-inner", 2)[0]
    T = tensor_grid(2, build_disc_grid(12, 48))
    s = desc.sup_norm(T)
    assert 0.99 < s <= 1.0
    assert desc.sup_norm(T, lattice=True) >= desc.sup_norm(T, lattice=False)


def test_bump_unit_mass_and_moments():
    mass = integrate.dblquad(lambda r, t: bump(r) * r, 0, 2 * math.pi, 0, 1, epsabs=1e-12)[0]
    assert abs(mass - 1) < 1e-9
    assert bump_moment(0) == pytest.approx(1.0, abs=1e-13)
    m1 = integrate.dblquad(lambda r, t: r**3 * bump(r), 0, 2 * math.pi, 0, 1, epsabs=1e-12)[0]
    assert bump_moment(1) == pytest.approx(m1, rel=1e-8)
    assert bump(1.2) == 0


def _poly_at(poly, z1, z2):
    return sum(c * z1**e[0] * np.conj(z1) ** e[1] * z2**e[2] * np.conj(z2) ** e[3] for e, c in poly.items())


def test_mollified_polynomial_by_direct_convolution():
    base = corpus_forms("polynomial", 2, seed=2, count=1)[0]
    r = 0.9
    eps = (1 - r) / 2
    F = mollified_form(base, r)
    assert F.params["eps"] == pytest.approx(eps)
    y = build_disc_grid(80, 16)
    yn = y.nodes.reshape(-1)
    w = y.weights.reshape(-1) * bump(yn)
    z1, z2 = 0.3 + 0.2j, -0.1 + 0.4j
    for j in range(2):
        f = base.components[j].monomials()
        # F_r(z) = int f(r (z - eps y)) chi(y1) chi(y2) dA(y1) dA(y2)
        vals = _poly_at(f, r * (z1 - eps * yn[:, None]), r * (z2 - eps * yn[None, :]))
        direct = np.sum(w[:, None] * w[None, :] * vals)
        assert abs(_poly_at(F.components[j].monomials(), z1, z2) - direct) < 1e-8


def test_mollified_converges_as_r_to_one():
    T = tensor_grid(2, build_disc_grid(12, 24))
    for base in corpus_forms("polynomial", 2, seed=0, count=3):
        f = base.to_field(T)
        errs = []
        for r in MOLLIFIER_RADII:
            F = mollified_form(base, r).to_field(T)
            mag = np.sqrt(sum(np.abs(a - b) ** 2 for a, b in zip(F.coefficients, f.coefficients)))
            errs.append(lp_norm(mag, 2, T))
        assert errs[0] > errs[1] > errs[2]


def test_mollified_kerzman_is_dilated():
    moll = [d for d in corpus_forms("mollified", 2) if d.kerzman_r is not None]
    assert [d.kerzman_r for d in moll] == list(MOLLIFIER_RADII)
    f = moll[0].to_field(T2, closedness_tolerance=1.0)
    assert np.max(np.abs(f.coefficients[0] - inner_function(0.9 * Z2))) < 1e-15


@given(st.integers(0, 500))
def test_separable_sup_matches_dense_evaluation(seed):
    desc = corpus_forms("polynomial", 2, seed=seed, count=1)[0]
    comp = desc.components[0]
    if not comp.terms:
        return
    assert comp.sup(T2, lattice=False) == pytest.approx(np.max(np.abs(comp.evaluate(T2))), rel=1e-12)
    assert comp.sup(T2) >= comp.sup(T2, lattice=False)


def test_separable_monomials_round_trip():
    poly = {(1, 0, 0, 2): 2.0, (0, 1, 1, 1): -1j}
    S = Separable.from_monomials(2, poly)
    assert S.monomials() == poly
    assert np.allclose(S.evaluate(T2), 2 * Z1 * np.conj(Z2) ** 2 - 1j * np.conj(Z1) * np.abs(Z2) ** 2)
