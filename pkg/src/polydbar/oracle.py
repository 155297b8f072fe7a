"""Independent reference path for the canonical solution.

The oracle never touches the kernel operators.  It builds *some* solution
slot by slot (staircase), using a spectral polar Cauchy solver and the
boundary Cauchy integral, then removes the holomorphic part with a
truncated orthonormal basis of the Bergman space.  Finite-difference
slice derivatives on local complex-plane stencils live here too.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

from .domain import DomainChart, QuadratureGrid, TensorGrid
from .fields import Form01Field, ScalarField, region_mask


class StaircaseError(ValueError):
    def __init__(self, slot: int, residual: float, tolerance: float):
        super().__init__(
            f"staircase residual {residual:.3e} in slot {slot} exceeds tolerance {tolerance:.1e}"
        )
        self.slot = slot
        self.residual = residual
        self.tolerance = tolerance


# ---------------------------------------------------------------------------
# finite-difference slice derivative

@functools.lru_cache(maxsize=32)
def _stencil(chart: DomainChart, grid: QuadratureGrid):
    """3x3 index stencils exact for dbar on u^a v^b, a, b <= 2.

    (u, v) is a local frame aligned with the outward radial neighbour.  The
    centre ring borrows its inner neighbours from across the origin.
    """
    n_r, n_a = grid.shape
    if n_r < 4 or n_a < 4:
        raise ValueError("slice derivative needs at least 4 nodes per direction")
    if n_a % 2:
        raise ValueError("slice derivative needs an even angular count")
    pts = chart.forward(grid.nodes)
    ii, pp = np.meshgrid(np.arange(n_r - 1), np.arange(n_a), indexing="ij")
    ii = ii.ravel()
    pp = pp.ravel()
    half = n_a // 2
    nbr_i, nbr_p = [], []
    for di in (0, 1, -1):
        for dp in (0, 1, -1):
            at = ii + di
            shift = np.where(at < 0, half, 0)
            nbr_i.append(np.where(at < 0, 0, at))
            nbr_p.append((pp + shift + np.where(at < 0, -dp, dp)) % n_a)
    nbr_i = np.stack(nbr_i, axis=1)
    nbr_p = np.stack(nbr_p, axis=1)
    delta = pts[nbr_i, nbr_p] - pts[ii, pp][:, None]
    rot = delta[:, 3:4] / np.abs(delta[:, 3:4])  # (di, dp) = (1, 0)
    loc = delta * np.conj(rot)
    hu = np.abs(loc.real).max(axis=1, keepdims=True)
    hv = np.abs(loc.imag).max(axis=1, keepdims=True)
    U = loc.real / hu
    V = loc.imag / hv
    A = np.stack([U**a * V**b for a in range(3) for b in range(3)], axis=1)
    rhs = np.zeros((ii.size, 9), dtype=complex)
    rhs[:, 3] = rot[:, 0] / (2 * hu[:, 0])  # a=1, b=0
    rhs[:, 1] = 1j * rot[:, 0] / (2 * hv[:, 0])  # a=0, b=1
    c = np.linalg.solve(A + 0j, rhs[..., None])[..., 0]
    return ii * n_a + pp, nbr_i * n_a + nbr_p, c


_OFFSETS = [(di, dp) for di in (0, 1, -1) for dp in (0, 1, -1)]


def slice_dbar(F: ScalarField, j: int) -> ScalarField:
    """Second-order d/dzbar_j at interior nodes; the outer ring is set to NaN."""
    if not 1 <= j <= F.n:
        raise IndexError(f"slot {j} out of range 1..{F.n}")
    k = j - 1
    grid = F.grid.factors[k]
    n_r, n_a = grid.shape
    _, _, c = _stencil(F.grid.charts[k], grid)
    cw = c.reshape(n_r - 1, n_a, 9)
    full = F.grid.shape
    pre = int(np.prod(full[:2 * k], dtype=np.int64))
    post = int(np.prod(full[2 * k + 2:], dtype=np.int64))
    vals = F.values.reshape(pre, n_r, n_a, post)
    out = np.full(vals.shape, np.nan + 0j)
    wrap = (np.arange(n_a) + n_a // 2) % n_a
    step_pre = max(1, 2**21 // (grid.size * post))
    step_post = post if pre > 1 else max(1, 2**21 // grid.size)
    for a0 in range(0, pre, step_pre):
        for b0 in range(0, post, step_post):
            V = vals[a0:a0 + step_pre, :, :, b0:b0 + step_post]
            Vp = np.concatenate([V[:, :, -1:], V, V[:, :, :1]], axis=2)
            acc = np.zeros((V.shape[0], n_r - 1) + V.shape[2:], dtype=complex)
            for q, (di, dp) in enumerate(_OFFSETS):
                w = cw[None, :, :, q, None]
                cols = slice(1 + dp, 1 + dp + n_a)
                if di >= 0:
                    acc += w * Vp[:, di:di + n_r - 1, cols]
                else:
                    acc[:, 1:] += w[:, 1:] * Vp[:, :n_r - 2, cols]
                    acc[:, 0] += w[:, 0] * V[:, 0][:, np.roll(wrap, dp)]
            out[a0:a0 + step_pre, :n_r - 1, :, b0:b0 + step_post] = acc
    return ScalarField(F.grid, out.reshape(full))


# ---------------------------------------------------------------------------
# truncated Bergman basis

@dataclass(frozen=True)
class TruncatedBasis:
    """Orthonormal monomials e_a = sqrt((a+1)/pi) zeta^a, 0 <= a <= degree.

    On a mapped chart the functions are e_a(phi(z)) phi'(z), re-orthonormalized
    under the grid quadrature.
    """

    degree: int = 10

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("basis degree must be >= 0")

    def raw(self, chart: DomainChart, grid: QuadratureGrid) -> np.ndarray:
        zeta = grid.nodes.reshape(-1)
        a = np.arange(self.degree + 1)[:, None]
        E = np.sqrt((a + 1) / np.pi) * zeta[None, :] ** a
        if not chart.is_disc:
            E = E / chart.derivative(zeta)[None, :]
        return E

    def gram(self, chart: DomainChart, grid: QuadratureGrid) -> np.ndarray:
        E = self.raw(chart, grid)
        w = _area(chart, grid)
        return (E * w[None, :]) @ np.conj(E).T

    def evaluate(self, chart: DomainChart, grid: QuadratureGrid) -> np.ndarray:
        E = self.raw(chart, grid)
        L = np.linalg.cholesky(self.gram(chart, grid))
        return np.linalg.solve(L, E)


def _area(chart, grid):
    w = grid.weights.reshape(-1)
    if chart.is_disc:
        return w
    return w * np.abs(chart.derivative(grid.nodes.reshape(-1))) ** 2


def basis_projection(F: ScalarField, basis: TruncatedBasis) -> ScalarField:
    """sum <F, e> e over the tensor basis; inner products by quadrature."""
    grid = F.grid
    mats = []
    coeffs = F.values
    for j in range(grid.n):
        g = grid.factors[j]
        E = basis.evaluate(grid.charts[j], g)
        mats.append(E)
        w = _area(grid.charts[j], g)
        coeffs = coeffs.reshape(coeffs.shape[:j] + (g.size,) + coeffs.shape[j + 2:])
        coeffs = np.moveaxis(np.tensordot(np.conj(E) * w[None, :], coeffs, axes=([1], [j])), 0, j)
    out = coeffs
    for j in range(grid.n):
        out = np.moveaxis(np.tensordot(mats[j], out, axes=([0], [j])), 0, j)
    return ScalarField(grid, out.reshape(grid.shape))


# ---------------------------------------------------------------------------
# spectral polar Cauchy solver

@functools.lru_cache(maxsize=None)
def _legendre_tools(n_r: int):
    x, w = np.polynomial.legendre.leggauss(n_r)
    V = np.polynomial.legendre.legvander(x, n_r - 1)
    scale = (2 * np.arange(n_r) + 1) / 2
    forward = (V * w[:, None]).T * scale[:, None]  # samples -> Legendre coefficients
    return x, forward


def _profile_eval(n_r: int, s: np.ndarray, g: float) -> np.ndarray:
    """Matrix mapping node samples of a radial profile to values at radii s."""
    _, forward = _legendre_tools(n_r)
    t = 1.0 - (1.0 - np.clip(s, 0, 1)) ** (1.0 / g)
    return np.polynomial.legendre.legvander(2 * t - 1, n_r - 1) @ forward


@functools.lru_cache(maxsize=16)
def _cauchy_modes(grid: QuadratureGrid) -> np.ndarray:
    """Mode matrices of the area Cauchy transform: input mode m -> output m - 1."""
    n_r, n_a = grid.shape
    g = grid.grading_exponent
    r = grid.radii
    modes = np.fft.fftfreq(n_a, 1.0 / n_a).astype(int)
    C = np.zeros((n_a, n_r, n_r))
    nj = n_r // 2 + n_a // 4 + 4
    outer = [_graded_rule(ri, max(n_a // 2, 2)) for ri in r]
    outer_eval = [_profile_eval(n_r, s, g) for s, _ in outer]
    jacobi = {}
    for mi, m in enumerate(modes):
        if n_a % 2 == 0 and abs(m) >= n_a // 2:
            continue
        if m <= 0:
            # 2 r int_0^1 u^{1-m} f(r u) du with a Gauss-Jacobi rule in u
            if m not in jacobi:
                x, wj = roots_jacobi(nj, 0.0, float(1 - m))
                jacobi[m] = ((x + 1) / 2, wj / 2.0 ** (2 - m))
            u, wu = jacobi[m]
            E = _profile_eval(n_r, (r[:, None] * u[None, :]).ravel(), g).reshape(n_r, nj, n_r)
            C[mi] = 2 * r[:, None] * np.einsum("q,iqk->ik", wu, E)
        else:
            for i, ri in enumerate(r):
                s, ws = outer[i]
                C[mi, i] = -2 * ((ws * (ri / s) ** (m - 1)) @ outer_eval[i])
    return C


def _graded_rule(a: float, m_max: int):
    edges = [a]
    ratio = np.exp(2.5 / m_max)
    while edges[-1] < 1:
        edges.append(min(1.0, edges[-1] * ratio, edges[-1] + 0.04))
    x, w = np.polynomial.legendre.leggauss(14)
    lo = np.array(edges[:-1])[:, None]
    hi = np.array(edges[1:])[:, None]
    s = (hi - lo) / 2 * x[None, :] + (hi + lo) / 2
    ws = (hi - lo) / 2 * w[None, :]
    return s.ravel(), ws.ravel()


def _along_slot(values: np.ndarray, k: int, fn):
    moved = np.moveaxis(values, (2 * k, 2 * k + 1), (0, 1))
    out = fn(moved.reshape(moved.shape[:2] + (-1,)))
    out = out.reshape(out.shape[:2] + moved.shape[2:])
    return np.ascontiguousarray(np.moveaxis(out, (0, 1), (2 * k, 2 * k + 1)))


def polar_cauchy(values: np.ndarray, grid: QuadratureGrid, k: int) -> np.ndarray:
    """Disc Cauchy transform along slot k of a tensor array in reference coordinates."""
    C = _cauchy_modes(grid)
    theta = grid.angles

    def fn(v):
        coef = np.fft.fft(v, axis=1).transpose(1, 0, 2)
        out = np.matmul(C, coef).transpose(1, 0, 2)
        return np.fft.ifft(out, axis=1) * np.exp(-1j * theta)[None, :, None]

    return _along_slot(values, k, fn)


def boundary_holomorphic(values: np.ndarray, grid: QuadratureGrid, k: int) -> np.ndarray:
    """Boundary Cauchy integral sum_{m >= 0} f_m(1) zeta^m along slot k."""
    n_r, n_a = grid.shape
    modes = np.fft.fftfreq(n_a, 1.0 / n_a).astype(int)
    keep = (modes >= 0) & (modes < (n_a + 1) // 2)
    trace = _profile_eval(n_r, np.array([1.0]), grid.grading_exponent)[0]
    powers = np.where(keep[None, :], grid.radii[:, None] ** np.maximum(modes, 0)[None, :], 0.0)

    def fn(v):
        coef = np.fft.fft(v, axis=1)
        at_one = np.tensordot(trace, coef, axes=([0], [0]))  # (n_a, M)
        return np.fft.ifft(powers[:, :, None] * at_one[None, :, :], axis=1)

    return _along_slot(values, k, fn)


def staircase_solution(f: Form01Field, check: bool = True) -> ScalarField:
    """Slot-ascending successive Cauchy transforms giving some solution of dbar u = f."""
    grid = f.grid
    n = grid.n
    h = []
    for j in range(n):
        c = f.coefficients[j]
        chart = grid.charts[j]
        if not chart.is_disc:
            c = c * grid.broadcast(j, np.conj(chart.derivative(grid.factors[j].nodes)))
        h.append(np.array(c))
    u = np.zeros(grid.shape, dtype=complex)
    for k in range(n):
        u += polar_cauchy(h[k], grid.factors[k], k)
        for l in range(k + 1, n):
            h[l] = boundary_holomorphic(h[l], grid.factors[k], k)
        h[k] = None
    out = ScalarField(grid, u)
    if check:
        mask = region_mask(grid, f.residual_radius)
        tol = f.closedness_tolerance
        for j in range(1, n + 1):
            d = np.abs(slice_dbar(out, j).values - f.coefficients[j - 1])
            res = float(np.nanmax(np.where(mask, d, np.nan)))
            if res > tol:
                raise StaircaseError(j, res, tol)
    return out


def canonical_oracle(f: Form01Field, basis: TruncatedBasis = TruncatedBasis(10), check: bool = True) -> ScalarField:
    u = staircase_solution(f, check=check)
    return u - basis_projection(u, basis)
