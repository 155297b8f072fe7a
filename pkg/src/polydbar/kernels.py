"""Green's function, solution kernel, Bergman kernel and related quantities.

Everything is evaluated in closed form on the disc and transported to mapped
charts through phi = psi^{-1}:

    G_Omega(z, w) = G_D(phi(z), phi(w))
    k_Omega(z, w) = phi'(z) k_D(phi(z), phi(w))
    K_Omega(z, w) = phi'(z) conj(phi'(w)) K_D(phi(z), phi(w))

The second half of the module houses the registry of kernel inequalities
and the sampling machinery that measures their constants.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.stats import qmc

from .domain import DomainChart, boundary_distance, map_inverse, unit_disc_chart


class SingularityError(ValueError):
    """Raised when a kernel is evaluated at coincident points."""


def _pull(chart: DomainChart, z):
    z = np.asarray(z, dtype=complex)
    if chart.is_disc:
        return z, np.ones_like(z)
    zeta = map_inverse(chart, z)
    return zeta, 1.0 / chart.derivative(zeta)


def _check_distinct(a, b):
    if np.any(a == b):
        raise SingularityError("kernel evaluated at coincident points")


def green(chart: DomainChart, z, w):
    zz, _ = _pull(chart, z)
    ww, _ = _pull(chart, w)
    _check_distinct(zz, ww)
    return np.log(np.abs((ww - zz) / (1 - zz * np.conj(ww))) ** 2) / np.pi


def kernel_k(chart: DomainChart, z, w):
    """k(z, w) = dG/dz."""
    zz, dphi = _pull(chart, z)
    ww, _ = _pull(chart, w)
    _check_distinct(zz, ww)
    return dphi * (1 - np.abs(ww) ** 2) / (np.pi * (zz - ww) * (1 - zz * np.conj(ww)))


def bergman_kernel(chart: DomainChart, z, w):
    zz, dphi_z = _pull(chart, z)
    ww, dphi_w = _pull(chart, w)
    return dphi_z * np.conj(dphi_w) / (np.pi * (1 - zz * np.conj(ww)) ** 2)


def green_mixed(chart: DomainChart, z, w):
    """Return (d_z d_w G, d_z d_wbar G); the second one is the Bergman kernel."""
    zz, dphi_z = _pull(chart, z)
    ww, dphi_w = _pull(chart, w)
    _check_distinct(zz, ww)
    a = dphi_z * dphi_w / (np.pi * (zz - ww) ** 2)
    b = dphi_z * np.conj(dphi_w) / (np.pi * (1 - zz * np.conj(ww)) ** 2)
    return a, b


def green_gradient_norm(chart, z, w):
    """|grad_x G| for the real gradient in the first variable: 2|k|."""
    return 2 * np.abs(kernel_k(chart, z, w))


def green_hessian_norm(chart, z, w):
    """Frobenius norm of the mixed real Hessian grad_x grad_y G."""
    a, b = green_mixed(chart, z, w)
    return 2 * math.sqrt(2) * np.sqrt(np.abs(a) ** 2 + np.abs(b) ** 2)


def _wirtinger(fn, x, h, conj=False):
    """Central-difference d/dx (or d/dxbar) of fn at complex points x."""
    dx = (fn(x + h) - fn(x - h)) / (2 * h)
    dy = (fn(x + 1j * h) - fn(x - 1j * h)) / (2 * h)
    return (dx + 1j * dy) / 2 if conj else (dx - 1j * dy) / 2


def derivative_gate(chart: DomainChart | None = None, count: int = 1000, seed: int = 0,
                    step: float = 1e-5, mixed_step: float = 1e-3, min_separation: float = 0.05) -> dict:
    """Closed-form kernels against finite differences of the Green function.

    Pairs are Sobol samples in the reference disc of radius 0.95, mapped
    forward, with |z - w| > min_separation.  Returns maximum relative errors
    and, on the disc, the residual of k (z - w)(1 - z conj w) pi = 1 - |w|^2.
    """
    chart = chart or unit_disc_chart()
    u = qmc.Sobol(4, scramble=True, seed=seed).random_base2(int(np.ceil(np.log2(4 * count))))
    zr = 0.95 * np.sqrt(u[:, 0]) * np.exp(2j * np.pi * u[:, 1])
    wr = 0.95 * np.sqrt(u[:, 2]) * np.exp(2j * np.pi * u[:, 3])
    z, w = chart.forward(zr), chart.forward(wr)
    keep = np.abs(z - w) > min_separation
    z, w = z[keep][:count], w[keep][:count]
    if z.size < count:
        raise RuntimeError("could not draw enough separated pairs")
    k = kernel_k(chart, z, w)
    k_fd = _wirtinger(lambda x: green(chart, x, w), z, step)
    K = bergman_kernel(chart, z, w)

    def mixed(h):
        return _wirtinger(lambda y: _wirtinger(lambda x: green(chart, x, y), z, h), w, h, conj=True)

    K_fd = (4 * mixed(mixed_step / 2) - mixed(mixed_step)) / 3  # Richardson, O(h^4)
    out = {
        "pairs": int(z.size),
        "k_rel_error": float(np.max(np.abs(k - k_fd) / np.abs(k))),
        "bergman_rel_error": float(np.max(np.abs(K - K_fd) / np.abs(K))),
    }
    if chart.is_disc:
        ident = k * (z - w) * (1 - z * np.conj(w)) * np.pi - (1 - np.abs(w) ** 2)
        out["disc_identity"] = float(np.max(np.abs(ident)))
    return out


# ---------------------------------------------------------------------------
# harmonic extension and the H function

def harmonic_extension(boundary_values, w, n: int | None = None):
    """Poisson integral of the trigonometric interpolant of boundary data.

    ``boundary_values`` is either an array of samples at xi_k = exp(2 pi i k/n)
    or a callable on the unit circle (then ``n`` nodes are used, default 256).
    The result is sum_m c_m |w|^|m| e^{i m arg w} over the discrete Fourier
    coefficients, so trigonometric polynomials below the Nyquist degree are
    extended exactly (the Nyquist mode is split evenly between +-n/2).
    """
    w = np.asarray(w, dtype=complex)
    if np.any(np.abs(w) >= 1):
        raise ValueError("harmonic extension is evaluated strictly inside the disc")
    if callable(boundary_values):
        n = 256 if n is None else int(n)
        xi = np.exp(2j * np.pi * np.arange(n) / n)
        vals = np.asarray(boundary_values(xi), dtype=complex)
    else:
        vals = np.asarray(boundary_values, dtype=complex)
        n = vals.size
    if n < 64:
        raise ValueError("need at least 64 boundary samples")
    c = np.fft.fft(vals) / n
    m = np.fft.fftfreq(n, 1.0 / n).astype(int)
    flat = w.reshape(-1)
    out = np.empty(flat.shape, dtype=complex)
    half = n // 2 if n % 2 == 0 else None
    step = max(1, 4_000_000 // n)
    for s in range(0, flat.size, step):
        ww = flat[s:s + step, None]
        r, e = np.abs(ww), np.exp(1j * np.angle(ww))
        terms = c[None, :] * r ** np.abs(m)[None, :] * e ** m[None, :]
        if half is not None:
            k = int(np.nonzero(m == -half)[0][0])
            terms[:, k] = c[k] * r[:, 0] ** half * (e[:, 0] ** half + e[:, 0] ** -half) / 2
        out[s:s + step] = terms.sum(axis=1)
    return out.reshape(w.shape)


class SmoothWeight:
    """A real smooth function on the closed disc with its Wirtinger derivatives."""

    def __init__(self, f, d_w=None, d_wbar=None, name="psi"):
        self.f = f
        self._dw = d_w
        self._dwb = d_wbar
        self.name = name

    def __call__(self, w):
        return self.f(np.asarray(w, dtype=complex))

    def d_w(self, w):
        if self._dw is not None:
            return self._dw(w)
        h = 1e-6
        fx = (self(w + h) - self(w - h)) / (2 * h)
        fy = (self(w + 1j * h) - self(w - 1j * h)) / (2 * h)
        return (fx - 1j * fy) / 2

    def d_wbar(self, w):
        if self._dwb is not None:
            return self._dwb(w)
        h = 1e-6
        fx = (self(w + h) - self(w - h)) / (2 * h)
        fy = (self(w + 1j * h) - self(w - 1j * h)) / (2 * h)
        return (fx + 1j * fy) / 2


RE_W = SmoothWeight(
    lambda w: np.real(w) + 0j,
    d_w=lambda w: np.full(np.shape(w), 0.5 + 0j),
    d_wbar=lambda w: np.full(np.shape(w), 0.5 + 0j),
    name="Re w",
)


def _as_weight(psi) -> SmoothWeight:
    if isinstance(psi, SmoothWeight):
        return psi
    if callable(psi):
        return SmoothWeight(psi)
    c = complex(psi)
    return SmoothWeight(lambda w: np.full(np.shape(w), c), lambda w: 0 * w, lambda w: 0 * w, name="const")


def _trapezoid_size(z, w):
    # geometric convergence rate of the trapezoid rule for the Poisson integral
    gap_w = 1 - np.abs(w)
    absz = np.abs(z)
    with np.errstate(divide="ignore"):
        gap_z = np.where(absz > 0, np.abs(np.log(np.maximum(absz, 1e-300))), np.inf)
    gap = np.minimum(gap_w, gap_z)
    n = np.ceil(38.0 / np.maximum(gap, 1e-6))
    n = 2 ** np.ceil(np.log2(np.clip(n, 64, 2**17)))
    return n.astype(np.int64)


def _poisson_terms(z, w, psi: SmoothWeight, what: str):
    """Trapezoid Poisson integrals of psi(xi) times kernels in z, grouped by size."""
    z = np.asarray(z, dtype=complex).reshape(-1)
    w = np.asarray(w, dtype=complex).reshape(-1)
    sizes = _trapezoid_size(z, w)
    outs = {}
    for n in np.unique(sizes):
        idx = np.nonzero(sizes == n)[0]
        xi = np.exp(2j * np.pi * np.arange(n) / n)
        px = psi(xi)
        step = max(1, 4_000_000 // int(n))
        for s in range(0, idx.size, step):
            sel = idx[s:s + step]
            zz = z[sel, None]
            ww = w[sel, None]
            pk = (1 - np.abs(ww) ** 2) / np.abs(xi[None, :] - ww) ** 2
            for key in what:
                if key == "H":
                    data = px * np.log(np.abs(zz - xi[None, :]) ** 2) / np.pi
                    kern = pk
                elif key == "Hz":
                    data = px / (np.pi * (zz - xi[None, :]))
                    kern = pk
                elif key == "Hzb":
                    data = px / (np.pi * np.conj(zz - xi[None, :]))
                    kern = pk
                elif key == "Hz_w":
                    data = px / (np.pi * (zz - xi[None, :]))
                    kern = xi[None, :] / (xi[None, :] - ww) ** 2
                elif key == "Hz_wb":
                    data = px / (np.pi * (zz - xi[None, :]))
                    kern = np.conj(xi[None, :]) / np.conj(xi[None, :] - ww) ** 2
                else:
                    raise KeyError(key)
                outs.setdefault(key, np.empty(z.shape, dtype=complex))[sel] = np.sum(kern * data, axis=1) / n
    return outs


def h_function(psi, z, w):
    """H(z, w) = P[psi log|z - .|^2 / pi](w) - psi(w) P[log|z - .|^2 / pi](w).

    The second harmonic extension is taken in closed form: log|1 - z conj(w)|^2
    for |z| < 1 and log|z - w|^2 for |z| > 1 (harmonic in w in both cases).
    """
    psi = _as_weight(psi)
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    z, w = np.broadcast_arrays(z, w)
    shape = z.shape
    first = _poisson_terms(z, w, psi, ("H",))["H"].reshape(shape)
    inside = np.abs(z) <= 1
    q = np.where(inside, np.log(np.abs(1 - z * np.conj(w)) ** 2), np.log(np.abs(z - w) ** 2)) / np.pi
    return first - psi(w) * q


def h_gradient_z(psi, z, w):
    """|grad_z H(z, w)| as the Frobenius norm of the real Jacobian."""
    psi = _as_weight(psi)
    z, w = np.broadcast_arrays(np.asarray(z, dtype=complex), np.asarray(w, dtype=complex))
    shape = z.shape
    t = _poisson_terms(z, w, psi, ("Hz", "Hzb"))
    inside = np.abs(z) <= 1
    qz = np.where(inside, -np.conj(w) / (1 - z * np.conj(w)), 1 / np.where(inside, 1, z - w)) / np.pi
    qzb = np.conj(np.where(inside, -np.conj(w) / (1 - z * np.conj(w)), 1 / np.where(inside, 1, z - w))) / np.pi
    pw = psi(w)
    hz = t["Hz"].reshape(shape) - pw * qz
    hzb = t["Hzb"].reshape(shape) - pw * qzb
    return np.sqrt(2 * (np.abs(hz) ** 2 + np.abs(hzb) ** 2))


def h_mixed_gradient(psi, z, w):
    """|grad_w dH/dz|."""
    psi = _as_weight(psi)
    z, w = np.broadcast_arrays(np.asarray(z, dtype=complex), np.asarray(w, dtype=complex))
    shape = z.shape
    t = _poisson_terms(z, w, psi, ("Hz_w", "Hz_wb"))
    inside = np.abs(z) <= 1
    safe = np.where(inside, 1, z - w)
    qz = np.where(inside, -np.conj(w) / (1 - z * np.conj(w)), 1 / safe) / np.pi
    qz_w = np.where(inside, 0, 1 / safe**2) / np.pi
    qz_wb = np.where(inside, -1 / (1 - z * np.conj(w)) ** 2, 0) / np.pi
    pw = psi(w)
    dw = t["Hz_w"].reshape(shape) - psi.d_w(w) * qz - pw * qz_w
    dwb = t["Hz_wb"].reshape(shape) - psi.d_wbar(w) * qz - pw * qz_wb
    return np.sqrt(2 * (np.abs(dw) ** 2 + np.abs(dwb) ** 2))


def r_weight(w):
    return 1 - np.abs(w) ** 2


def r_pair(z, w):
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    return np.where(np.abs(z) <= 1, 1 - z * np.conj(w), z - w)


# ---------------------------------------------------------------------------
# kernel algebra on Omega^2

class KernelAlgebra(NamedTuple):
    tau: np.ndarray
    tau_power: np.ndarray
    b: np.ndarray
    h: np.ndarray
    a: np.ndarray
    c: np.ndarray


def _h_and_dh(chart, z, w):
    """h(z, w) = (w - z) k(z, w) and its w-bar derivative (w - z) K(z, w)."""
    k = kernel_k(chart, z, w)
    K = bergman_kernel(chart, z, w)

    return (w - z) * k, (w - z) * K, k


def kernel_algebra(chart: DomainChart, z, w, i: int, j: int) -> KernelAlgebra:
    """Closed-form kernel algebra quantities for slots i != j (1-based).

    z and w have trailing dimension n (points of Omega^n).  Returned:
      tau       = |z_i - w_i|^2 + |z_j - w_j|^2
      tau_power = |w_j - z_j|^2 / tau
      b         = d/dwbar_j (k_j tau_power), via the expanded form in h_j
      h         = h(z_j, w_j)
      a         = |z_j - w_j|^2 k_j d/dwbar_j b^{j,i}
      c         = k_j |w_j - z_j|^2 (z_j - w_j) / tau^2
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if i == j:
        raise ValueError("kernel algebra needs two distinct slots")
    zi, wi = z[..., i - 1], w[..., i - 1]
    zj, wj = z[..., j - 1], w[..., j - 1]
    if np.any(zi == wi) or np.any(zj == wj):
        raise SingularityError("coincident components")
    di2 = np.abs(zi - wi) ** 2
    dj2 = np.abs(zj - wj) ** 2
    tau = di2 + dj2
    tau_j = dj2 / tau
    tau_i = di2 / tau
    hj, dhj, kj = _h_and_dh(chart, zj, wj)
    hi, dhi, ki = _h_and_dh(chart, zi, wi)
    b_ij = (hj + np.conj(wj - zj) * dhj) / tau - hj * tau_j / tau
    b_ji = (hi + np.conj(wi - zi) * dhi) / tau - hi * tau_i / tau
    # d/dwbar_j of b^{j,i}: b^{j,i} depends on w_j only through tau
    db_ji = (-b_ji + hi * tau_i / tau) * (wj - zj) / tau
    a = dj2 * kj * db_ji
    c = kj * dj2 * (zj - wj) / tau**2
    return KernelAlgebra(tau, tau_j, b_ij, hj, a, c)


def dbar_b(chart: DomainChart, z, w, i: int, j: int):
    """d/dwbar_i of b^{i,j}."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    alg = kernel_algebra(chart, z, w, i, j)
    wi, zi = w[..., i - 1], z[..., i - 1]
    return (-alg.b + alg.h * alg.tau_power / alg.tau) * (wi - zi) / alg.tau


# ---------------------------------------------------------------------------
# bound registry

@dataclass
class Samples:
    chart: DomainChart
    z: np.ndarray
    w: np.ndarray
    dz: np.ndarray
    dw: np.ndarray


@dataclass(frozen=True)
class _BoundDef:
    family: str  # "planar", "pair" (Omega^2) or "hfun"
    lhs: Callable
    majorant: Callable
    extremal: Callable | None = None
    default_count: int = 80_000
    epsilon: float | None = None


@dataclass
class KernelBoundSpec:
    name: str
    lhs: Callable
    majorant: Callable
    sample_count: int = 80_000
    epsilon_parameter: float | None = None
    chart: DomainChart = field(default_factory=unit_disc_chart)
    family: str = "planar"


@dataclass
class EstimateReport:
    name: str
    measured_constant: float
    sample_count: int
    refinement_trace: list
    trace_counts: list
    seed: int
    chart: str = "disc"
    extremal_constant: float | None = None
    epsilon_parameter: float | None = None

    @property
    def trace_change(self) -> float:
        a, b = self.refinement_trace[-2], self.refinement_trace[-1]
        return abs(b - a) / abs(b) if b else 0.0

    def to_record(self) -> dict:
        return {
            "name": self.name,
            "chart": self.chart,
            "seed": self.seed,
            "sample_count": self.sample_count,
            "trace_counts": list(self.trace_counts),
            "refinement_trace": [float(x) for x in self.refinement_trace],
            "measured_constant": float(self.measured_constant),
            "extremal_constant": None if self.extremal_constant is None else float(self.extremal_constant),
            "epsilon_parameter": self.epsilon_parameter,
        }

    def to_text(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True)


def _dist(z1, z2):
    return np.abs(z1 - z2)


def _k(s, z=None, w=None):
    return kernel_k(s.chart, s.z if z is None else z, s.w if w is None else w)


def _pair_alg(s, i, j):
    return kernel_algebra(s.chart, s.z, s.w, i, j)


def _eq48a(s):
    h, dh, _ = _h_and_dh(s.chart, s.z, s.w)
    return np.abs(h) + np.abs(np.conj(s.w - s.z) * dh)


def _eq410_lhs(s):
    a12 = _pair_alg(s, 1, 2)
    a21 = _pair_alg(s, 2, 1)
    k1 = kernel_k(s.chart, s.z[:, 0], s.w[:, 0])
    k2 = kernel_k(s.chart, s.z[:, 1], s.w[:, 1])
    # |k_j||b^{j,i}| + |k_i||b^{i,j}| with (i, j) = (1, 2)
    return np.abs(k2) * np.abs(a21.b) + np.abs(k1) * np.abs(a12.b)


def _limit_eq46(eta):
    w = np.array([1 - eta])
    z = np.array([1 - eta**2])
    return z, w


def _limit_eq47(eta):
    w = np.array([1 - eta])
    z = np.array([-(1 - eta)])
    return z, w


def _build_registry() -> dict:
    reg = {}
    g = lambda s: np.abs(green(s.chart, s.z, s.w))
    reg["Thm2.1.i"] = _BoundDef("planar", g, lambda s: s.dz / _dist(s.z, s.w))
    reg["Thm2.1.ii"] = _BoundDef("planar", g, lambda s: s.dz * s.dw / _dist(s.z, s.w) ** 2)
    grad = lambda s: green_gradient_norm(s.chart, s.z, s.w)
    reg["Thm2.1.iii"] = _BoundDef("planar", grad, lambda s: 1 / _dist(s.z, s.w))
    reg["Thm2.1.iv"] = _BoundDef("planar", grad, lambda s: s.dw / _dist(s.z, s.w) ** 2)
    reg["Thm2.1.v"] = _BoundDef(
        "planar", lambda s: green_hessian_norm(s.chart, s.z, s.w), lambda s: 1 / _dist(s.z, s.w) ** 2
    )
    for eps in (0.25, 0.5, 1.0):
        tag = f"{eps:g}"
        reg[f"Eq2.14.eps{tag}"] = _BoundDef(
            "hfun",
            lambda s: np.abs(h_function(RE_W, s.z, s.w)),
            lambda s, e=eps: r_weight(s.w) / np.abs(r_pair(s.z, s.w)) ** e
            * np.log((1 + r_weight(s.w)) / r_weight(s.w)),
            default_count=8000,
            epsilon=eps,
        )
        reg[f"Eq2.15.eps{tag}"] = _BoundDef(
            "hfun",
            lambda s: h_gradient_z(RE_W, s.z, s.w),
            lambda s, e=eps: r_weight(s.w) / np.abs(r_pair(s.z, s.w)) ** (1 + e),
            default_count=8000,
            epsilon=eps,
        )
        reg[f"Eq2.16.eps{tag}"] = _BoundDef(
            "hfun",
            lambda s: h_mixed_gradient(RE_W, s.z, s.w),
            lambda s, e=eps: 1 / np.abs(r_pair(s.z, s.w)) ** (1 + e),
            default_count=8000,
            epsilon=eps,
        )
    absk = lambda s: np.abs(_k(s))
    reg["Eq4.6"] = _BoundDef("planar", absk, lambda s: 1 / _dist(s.z, s.w), extremal=_limit_eq46)
    reg["Eq4.7"] = _BoundDef("planar", absk, lambda s: s.dw / _dist(s.z, s.w) ** 2, extremal=_limit_eq47)
    reg["Eq4.8.a"] = _BoundDef("planar", _eq48a, lambda s: np.ones(s.z.shape))
    reg["Eq4.8.b"] = _BoundDef(
        "planar", lambda s: np.abs((s.w - s.z) * _k(s)), lambda s: s.dw / _dist(s.z, s.w)
    )
    reg["Eq4.9"] = _BoundDef("pair", lambda s: np.abs(_pair_alg(s, 1, 2).b), lambda s: 1 / _pair_alg(s, 1, 2).tau)
    reg["Eq4.10"] = _BoundDef(
        "pair",
        _eq410_lhs,
        lambda s: 1 / (_dist(s.z[:, 0], s.w[:, 0]) ** 1.5 * _dist(s.z[:, 1], s.w[:, 1]) ** 1.5),
    )
    reg["Eq4.16"] = _BoundDef(
        "pair",
        lambda s: np.abs(dbar_b(s.chart, s.z, s.w, 1, 2)),
        lambda s: _dist(s.z[:, 0], s.w[:, 0]) / _pair_alg(s, 1, 2).tau ** 2,
    )
    reg["Eq4.17"] = _BoundDef("pair", lambda s: np.abs(_pair_alg(s, 1, 2).a), lambda s: 1 / _pair_alg(s, 1, 2).tau)
    reg["Eq4.26"] = _BoundDef("pair", lambda s: np.abs(_pair_alg(s, 2, 1).c), lambda s: 1 / _pair_alg(s, 2, 1).tau)
    return reg


BOUND_REGISTRY = _build_registry()


def registered_bounds() -> list[str]:
    return list(BOUND_REGISTRY)


def registered_bound(name: str, chart: DomainChart | None = None, sample_count: int | None = None) -> KernelBoundSpec:
    if name not in BOUND_REGISTRY:
        raise KeyError(f"unregistered inequality {name!r}")
    d = BOUND_REGISTRY[name]
    return KernelBoundSpec(
        name=name,
        lhs=d.lhs,
        majorant=d.majorant,
        sample_count=d.default_count if sample_count is None else int(sample_count),
        epsilon_parameter=d.epsilon,
        chart=chart or unit_disc_chart(),
        family=d.family,
    )


MIN_SEPARATION = 1e-4
MIN_BOUNDARY = 1e-4
H_MIN_GAP = 1e-3


def _planar_draw(u, parity):
    """Map Sobol coordinates to (zeta_z, zeta_w) in the reference disc.

    Boundary distances and separations are log-uniform so that every scale
    between 1e-4 and 1 is visited; even draws place z relative to w.
    """
    dw = 10.0 ** (-4.0 * u[:, 0])
    w = (1 - dw) * np.exp(2j * np.pi * u[:, 1])
    rho = 10.0 ** (-4.0 + 4.3 * u[:, 2])
    rel = w + rho * np.exp(2j * np.pi * u[:, 3])
    dz = 10.0 ** (-4.0 * u[:, 2])
    ind = (1 - dz) * np.exp(2j * np.pi * u[:, 3])
    z = np.where(parity, rel, ind)
    return z, w


def _h_draw(u, parity):
    dw = 10.0 ** (-3.0 * u[:, 0])
    w = (1 - dw) * np.exp(2j * np.pi * u[:, 1])
    rho = 10.0 ** (-3.0 + 3.2 * u[:, 2])
    rel = w + rho * np.exp(2j * np.pi * u[:, 3])
    v = u[:, 2]
    inner = 1 - 10.0 ** (-3.0 + 3.0 * (2 * v))
    outer = 1 + 10.0 ** (-3.0 + 2.7 * (2 * v - 1))
    rad = np.where(v < 0.5, inner, outer)
    ind = rad * np.exp(2j * np.pi * u[:, 3])
    z = np.where(parity, rel, ind)
    return z, w


def draw_samples(spec: KernelBoundSpec, count: int, seed: int) -> Samples:
    """Deterministic quasi-random admissible samples for a bound family."""
    dim = 8 if spec.family == "pair" else 4
    chart = spec.chart
    sob = qmc.Sobol(d=dim, scramble=True, seed=seed)
    m = int(np.ceil(np.log2(max(count, 2) * 2.5)))
    accepted = []
    total = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        while total < count:
            u = sob.random_base2(m) if not accepted else sob.random(2**m)
            u = np.clip(u, 1e-12, 1 - 1e-12)
            parity = (np.arange(u.shape[0]) % 2) == 0
            if spec.family == "pair":
                z1, w1 = _planar_draw(u[:, :4], parity)
                z2, w2 = _planar_draw(u[:, 4:], (np.arange(u.shape[0]) // 2) % 2 == 0)
                zs = np.stack([z1, z2], axis=1)
                ws = np.stack([w1, w2], axis=1)
                ok = np.all(np.abs(zs) < 1, axis=1)
            elif spec.family == "hfun":
                z, w = _h_draw(u, parity)
                ok = (np.abs(np.abs(z) - 1) >= H_MIN_GAP) & (np.abs(z) < 1.5) & (np.abs(z - w) >= MIN_SEPARATION)
                zs, ws = z, w
            else:
                z, w = _planar_draw(u, parity)
                ok = np.abs(z) < 1
                zs, ws = z, w
            zs, ws = zs[ok], ws[ok]
            # map reference points to the physical domain
            if spec.family != "hfun" and not chart.is_disc:
                zs = chart.forward(zs)
                ws = chart.forward(ws)
            if spec.family == "hfun":
                dz = np.abs(np.abs(zs) - 1)
                dwv = 1 - np.abs(ws)
                keep = dwv >= H_MIN_GAP
            else:
                dz = boundary_distance(chart, zs)
                dwv = boundary_distance(chart, ws)
                sep = np.abs(zs - ws)
                if spec.family == "pair":
                    keep = np.all((sep >= MIN_SEPARATION) & (dwv >= MIN_BOUNDARY) & (dz >= MIN_BOUNDARY), axis=1)
                else:
                    keep = (sep >= MIN_SEPARATION) & (dwv >= MIN_BOUNDARY) & (dz >= MIN_BOUNDARY)
            accepted.append((zs[keep], ws[keep], dz[keep], dwv[keep]))
            total += int(np.count_nonzero(keep))
    z = np.concatenate([a[0] for a in accepted])[:count]
    w = np.concatenate([a[1] for a in accepted])[:count]
    dz = np.concatenate([a[2] for a in accepted])[:count]
    dw = np.concatenate([a[3] for a in accepted])[:count]
    return Samples(chart, z, w, dz, dw)


def _ratio(spec, s: Samples):
    lhs = np.asarray(spec.lhs(s), dtype=float)
    maj = np.asarray(spec.majorant(s), dtype=float)
    if np.any(maj <= 0) or not np.all(np.isfinite(maj)):
        raise ValueError(f"majorant of {spec.name} not strictly positive on the samples")
    return lhs / maj


def verify_bound(spec: KernelBoundSpec, seed: int = 0) -> EstimateReport:
    """Sampled supremum of lhs/majorant with a 4-level refinement trace."""
    if spec.name not in BOUND_REGISTRY:
        raise KeyError(f"unregistered inequality {spec.name!r}")
    if spec.sample_count < 1000:
        raise ValueError("sample_count must be at least 1000")
    n = int(spec.sample_count)
    s = draw_samples(spec, n, seed)
    ratio = _ratio(spec, s)
    if not np.all(np.isfinite(ratio)):
        raise FloatingPointError(f"non-finite ratio while sampling {spec.name}")
    counts = [n // 8, n // 4, n // 2, n]
    trace = [float(np.max(ratio[:c])) for c in counts]
    extremal = None
    definition = BOUND_REGISTRY[spec.name]
    if definition.extremal is not None and spec.chart.is_disc:
        vals = []
        for eta in 10.0 ** -np.arange(1, 8):
            z, w = definition.extremal(eta)
            lim = Samples(spec.chart, z, w, boundary_distance(spec.chart, z), boundary_distance(spec.chart, w))
            vals.append(float(_ratio(spec, lim)[0]))
        extremal = max(vals)
    return EstimateReport(
        name=spec.name,
        measured_constant=trace[-1],
        sample_count=n,
        refinement_trace=trace,
        trace_counts=counts,
        seed=seed,
        chart=spec.chart.name,
        extremal_constant=extremal,
        epsilon_parameter=spec.epsilon_parameter,
    )
