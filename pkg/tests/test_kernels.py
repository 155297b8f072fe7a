import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from polydbar.domain import boundary_distance, build_disc_grid, integrate, load_chart, map_inverse
from polydbar.kernels import (
    BOUND_REGISTRY,
    RE_W,
    EstimateReport,
    SingularityError,
    bergman_kernel,
    derivative_gate,
    green,
    green_mixed,
    h_function,
    harmonic_extension,
    kernel_algebra,
    kernel_k,
    registered_bound,
    registered_bounds,
    verify_bound,
)

DISC = load_chart("disc")


def _random_disc(rng, m, radius=0.95):
    return np.sqrt(rng.random(m)) * radius * np.exp(2j * np.pi * rng.random(m))


def test_green_value():
    assert abs(green(DISC, 0, 0.5) - math.log(0.25) / math.pi) < 1e-15
    assert abs(green(DISC, 0, 0.5) + 0.441271) < 1e-6


def test_green_symmetric_and_negative(rng):
    z, w = _random_disc(rng, 1000), _random_disc(rng, 1000)
    assert np.allclose(green(DISC, z, w), green(DISC, w, z), rtol=1e-13, atol=0)
    assert np.all(green(DISC, z, w) < 0)


def test_green_mobius_is_pullback(rng):
    mob = load_chart("mobius")
    z, w = mob.forward(_random_disc(rng, 200)), mob.forward(_random_disc(rng, 200))
    pz, pw = map_inverse(mob, z), map_inverse(mob, w)
    assert np.allclose(green(mob, z, w), green(DISC, pz, pw), rtol=1e-12, atol=0)


def test_green_vanishes_monotonically_at_boundary():
    r = np.linspace(0.9, 0.9999, 50)
    vals = np.abs(green(DISC, 0.3 + 0.2j, r * np.exp(0.7j)))
    assert np.all(np.diff(vals) < 0)
    assert vals[-1] < 1e-3


def test_coincident_points_signal():
    with pytest.raises(SingularityError):
        green(DISC, 0.1, 0.1)
    with pytest.raises(SingularityError):
        kernel_k(DISC, 0.1, 0.1)


def test_kernel_k_value():
    assert abs(kernel_k(DISC, 0, 0.5) + 3 / (2 * math.pi)) < 1e-15


def test_kernel_k_disc_identity(rng):
    z, w = _random_disc(rng, 1000), _random_disc(rng, 1000)
    lhs = kernel_k(DISC, z, w) * (z - w) * (1 - z * np.conj(w)) * np.pi
    assert np.max(np.abs(lhs - (1 - np.abs(w) ** 2))) < 1e-14


def test_kernel_k_extremal_products(rng):
    z, w = _random_disc(rng, 10_000, 0.999), _random_disc(rng, 10_000, 0.999)
    k = np.abs(kernel_k(DISC, z, w))
    assert np.max(k * np.abs(z - w)) <= 2 / math.pi + 1e-9
    assert np.max(k * np.abs(z - w) ** 2 / boundary_distance(DISC, w)) <= 2 / math.pi + 1e-9


@pytest.mark.parametrize("name", ["disc", "cardioid", "mobius", "scaled2"])
def test_derivative_gate(name):
    gate = derivative_gate(load_chart(name), count=1000)
    assert gate["pairs"] == 1000
    assert gate["k_rel_error"] <= 1e-6
    assert gate["bergman_rel_error"] <= 1e-6
    if name == "disc":
        assert gate["disc_identity"] < 1e-14


def test_bergman_values(rng):
    assert abs(bergman_kernel(DISC, 0, 0) - 1 / math.pi) < 1e-15
    z, w = _random_disc(rng, 1000), _random_disc(rng, 1000)
    for chart in (DISC, load_chart("cardioid")):
        zz, ww = chart.forward(z), chart.forward(w)
        assert np.allclose(bergman_kernel(chart, zz, ww), np.conj(bergman_kernel(chart, ww, zz)), rtol=1e-12)


def test_bergman_equals_mixed_green(rng):
    z, w = _random_disc(rng, 50), _random_disc(rng, 50)
    _, b = green_mixed(DISC, z, w)
    assert np.allclose(b, bergman_kernel(DISC, z, w), rtol=1e-14)


@pytest.mark.parametrize("a", [0, 1, 2])
def test_bergman_reproduces_monomials(a):
    g = build_disc_grid(32, 64)
    z = 0.3 + 0.2j
    w = g.nodes
    val = integrate(g, DISC, bergman_kernel(DISC, z, w) * w**a)
    assert abs(val - z**a) < 1e-10


def test_bergman_reproduces_on_mapped_chart():
    g = build_disc_grid(32, 64)
    chart = load_chart("cardioid")
    z = chart.forward(0.2 - 0.1j)
    w = chart.forward(g.nodes)
    val = integrate(g, chart, bergman_kernel(chart, z, w) * w**2)
    assert abs(val - z**2) < 1e-9


def test_harmonic_extension_examples(rng):
    w = _random_disc(rng, 20, 0.9)
    assert np.allclose(harmonic_extension(lambda xi: np.ones_like(xi), w), 1, atol=1e-13)
    assert np.allclose(harmonic_extension(lambda xi: xi.real, w), w.real, atol=1e-13)
    z = 0.4
    got = harmonic_extension(lambda xi: np.log(np.abs(z - xi) ** 2), w, n=1024)
    assert np.allclose(got, np.log(np.abs(1 - z * np.conj(w)) ** 2), atol=1e-10)


def test_harmonic_extension_errors():
    with pytest.raises(ValueError):
        harmonic_extension(np.ones(128), 1.0)
    with pytest.raises(ValueError):
        harmonic_extension(np.ones(16), 0.1)


@given(st.integers(0, 20), st.floats(0, 0.9), st.floats(0, 6.3))
def test_harmonic_extension_trig_polynomials(m, r, t):
    w = r * np.exp(1j * t)
    got = harmonic_extension(lambda xi: xi**m + np.conj(xi) ** m, w, n=64)
    assert abs(got - (w**m + np.conj(w) ** m)) < 1e-12


def test_h_function_trivial_cases(rng):
    w = _random_disc(rng, 10, 0.9)
    z = _random_disc(rng, 10, 1.4)
    assert np.max(np.abs(h_function(2.5, z, w))) < 1e-10
    assert np.max(np.abs(h_function(RE_W, 0, w))) < 1e-12


def test_h_function_bound_is_stable():
    rep = verify_bound(registered_bound("Eq2.14.eps0.5"), seed=3)
    assert np.isfinite(rep.measured_constant)
    assert rep.trace_change < 0.05


def test_kernel_algebra_example():
    z = np.array([0, 0], dtype=complex)
    w = np.array([0.5, 0.5], dtype=complex)
    alg = kernel_algebra(DISC, z, w, 1, 2)
    assert abs(alg.h + 3 / (4 * math.pi)) < 1e-15
    assert abs(alg.h + 0.238732) < 1e-6
    assert abs(alg.tau - 0.5) < 1e-15


def _fd_wbar(fn, w, j, h=1e-6):
    def shift(d):
        ww = w.copy()
        ww[..., j] += d
        return fn(ww)
    dx = (shift(h) - shift(-h)) / (2 * h)
    dy = (shift(1j * h) - shift(-1j * h)) / (2 * h)
    return (dx + 1j * dy) / 2


def test_kernel_algebra_matches_finite_differences(rng):
    z = np.stack([_random_disc(rng, 40, 0.8), _random_disc(rng, 40, 0.8)], axis=1)
    w = np.stack([_random_disc(rng, 40, 0.8), _random_disc(rng, 40, 0.8)], axis=1)
    alg = kernel_algebra(DISC, z, w, 1, 2)
    tau_power = lambda ww: np.abs(ww[:, 1] - z[:, 1]) ** 2 / (np.abs(z[:, 0] - ww[:, 0]) ** 2 + np.abs(z[:, 1] - ww[:, 1]) ** 2)
    b_def = lambda ww: kernel_k(DISC, z[:, 1], ww[:, 1]) * tau_power(ww)
    b_fd = _fd_wbar(b_def, w, 1)
    assert np.max(np.abs(b_fd - alg.b) / np.maximum(1, np.abs(alg.b))) < 1e-6
    bji = lambda ww: kernel_algebra(DISC, z, ww, 2, 1).b
    a_fd = np.abs(z[:, 1] - w[:, 1]) ** 2 * kernel_k(DISC, z[:, 1], w[:, 1]) * _fd_wbar(bji, w, 1)
    assert np.max(np.abs(a_fd - alg.a) / np.maximum(1, np.abs(alg.a))) < 1e-6
    inv_tau = lambda ww: 1 / (np.abs(z[:, 0] - ww[:, 0]) ** 2 + np.abs(z[:, 1] - ww[:, 1]) ** 2)
    c_fd = kernel_k(DISC, z[:, 1], w[:, 1]) * np.abs(z[:, 1] - w[:, 1]) ** 2 * _fd_wbar(inv_tau, w, 1)
    assert np.max(np.abs(c_fd - alg.c) / np.maximum(1, np.abs(alg.c))) < 1e-6


def test_kernel_algebra_rejects_bad_input():
    z = np.array([0.1, 0.2])
    with pytest.raises(ValueError):
        kernel_algebra(DISC, z, z + 0.1, 1, 1)
    with pytest.raises(SingularityError):
        kernel_algebra(DISC, z, np.array([0.1, 0.5]), 1, 2)


def test_registry_contents():
    names = set(registered_bounds())
    expected = {f"Thm2.1.{r}" for r in ("i", "ii", "iii", "iv", "v")}
    expected |= {f"Eq2.1{k}.eps{e}" for k in (4, 5, 6) for e in ("0.25", "0.5", "1")}
    expected |= {"Eq4.6", "Eq4.7", "Eq4.8.a", "Eq4.8.b", "Eq4.9", "Eq4.10", "Eq4.16", "Eq4.17", "Eq4.26"}
    assert names == expected
    assert set(BOUND_REGISTRY) == names


def test_eq46_measured_below_two_over_pi():
    rep = verify_bound(registered_bound("Eq4.6"), seed=0)
    assert rep.measured_constant <= 2 / math.pi + 1e-9
    assert abs(rep.extremal_constant - 2 / math.pi) < 1e-6


def test_thm21ii_trace_stable():
    rep = verify_bound(registered_bound("Thm2.1.ii"), seed=0)
    assert rep.trace_counts == [10_000, 20_000, 40_000, 80_000]
    assert np.isfinite(rep.measured_constant)
    assert rep.trace_change < 0.05


def test_eq410_finite():
    rep = verify_bound(registered_bound("Eq4.10"), seed=0)
    assert np.isfinite(rep.measured_constant) and rep.trace_change < 0.05


def test_verify_bound_errors():
    with pytest.raises(KeyError):
        registered_bound("Eq9.99")
    with pytest.raises(ValueError):
        verify_bound(registered_bound("Eq4.6", sample_count=10))


def test_report_reproducible_and_consistent():
    spec = registered_bound("Eq4.8.b", sample_count=4000)
    a, b = verify_bound(spec, seed=5), verify_bound(spec, seed=5)
    assert a.to_text() == b.to_text()
    assert isinstance(a, EstimateReport)
    assert a.measured_constant == a.refinement_trace[-1] == max(a.refinement_trace)
    assert a.to_record()["sample_count"] == 4000


def test_bounds_on_mapped_chart():
    rep = verify_bound(registered_bound("Eq4.6", load_chart("cardioid"), 4000), seed=1)
    assert rep.chart == "cardioid"
    assert rep.extremal_constant is None
    assert np.isfinite(rep.measured_constant)
