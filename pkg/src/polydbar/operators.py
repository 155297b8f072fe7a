"""Solution operators on polar factor grids and the canonical solution.

Every slot operator is rotation covariant on the disc, so it acts on each
angular Fourier mode separately.  A slot operator is stored as

    out(r_i, theta_p) = c_ip * [ ifft_m( R[m] @ fft(g)[m] ) + D_ip g_ip ]

where g = s * F is the scaled input, R[m] a radial matrix per FFT mode, D an
optional diagonal term and c_ip = t_ip * exp(i q theta_p) the output phase
times a target scaling.  Mapped charts enter only through s and t:

    P_Omega F = (1/psi') P_D[psi' F],   T_Omega F = (1/psi') T_D[|psi'|^2 F].

Three quadratures are available for T:
  * "product"      exact angular moments of k, radial interpolation
  * "subtraction"  node sampling with the exact moment M = conj(zeta)
  * "naive"        node sampling with the coincident node dropped
The projection always uses product integration of the Bergman kernel.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BarycentricInterpolator

from .domain import DomainChart, QuadratureGrid, map_inverse
from .fields import DEFAULT_TOLERANCE, Form01Field, NotClosedError, ScalarField, region_mask
from .kernels import kernel_k

ASCENDING = "ascending"
DESCENDING = "descending"
QUADRATURES = ("product", "subtraction", "naive")


@dataclass(frozen=True)
class SolverConfig:
    ordering: str = ASCENDING
    quadrature: str = "product"
    projection_degree: int = 8
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        if self.ordering not in (ASCENDING, DESCENDING):
            raise ValueError(f"unknown ordering {self.ordering!r}")
        if self.quadrature not in QUADRATURES:
            raise ValueError(f"unknown quadrature {self.quadrature!r}")
        if self.projection_degree < 0:
            raise ValueError("projection_degree must be >= 0")

    @property
    def singularity_subtraction(self) -> bool:
        return self.quadrature == "subtraction"

    @classmethod
    def with_subtraction(cls, flag: bool, **kw) -> "SolverConfig":
        return cls(quadrature="subtraction" if flag else "naive", **kw)


# ---------------------------------------------------------------------------
# radial quadrature helpers

def _t_of_r(r, g):
    return 1.0 - (1.0 - np.asarray(r, dtype=float)) ** (1.0 / g)


def _r_of_t(t, g):
    return 1.0 - (1.0 - t) ** g


def _dr_dt(t, g):
    return g * (1.0 - t) ** (g - 1.0)


@functools.lru_cache(maxsize=64)
def _lagrange(grid_key):
    n_r, _, g = grid_key
    x, _ = np.polynomial.legendre.leggauss(n_r)
    t_nodes = (x + 1) / 2
    return BarycentricInterpolator(t_nodes, np.eye(n_r), axis=0), t_nodes


def _gauss(a, b, n):
    x, w = np.polynomial.legendre.leggauss(n)
    return (b - a) / 2 * x + (a + b) / 2, (b - a) / 2 * w


def _signed_modes(n_a):
    m = np.fft.fftfreq(n_a, 1.0 / n_a).astype(int)
    return m


def _active(m, n_a):
    # the Nyquist mode carries no rotation-consistent information
    return np.abs(m) < n_a / 2 if n_a % 2 == 0 else np.ones_like(m, dtype=bool)


def _inner_rule(grid: QuadratureGrid, rho: float):
    """Points/weights for integrals over s in [0, rho] (in the t variable)."""
    g = grid.grading_exponent
    q = grid.n_radial // 2 + grid.n_angular // 4 + 8
    t1 = float(_t_of_r(rho, g))
    tq, wq = _gauss(0.0, t1, q)
    return _r_of_t(tq, g), wq * _dr_dt(tq, g), tq


def _outer_rule(grid: QuadratureGrid, rho: float):
    """Geometrically graded points for integrals over s in [rho, 1]."""
    g = grid.grading_exponent
    m_max = max(grid.n_angular // 2, 2)
    step = 3.0 / m_max
    pieces = []
    a = rho
    while a < 1.0:
        b = min(1.0, a * np.exp(step), a + 0.05)
        pieces.append((a, b))
        a = b
    pts, wts, ts = [], [], []
    for a, b in pieces:
        ta, tb = _t_of_r(a, g), _t_of_r(b, g)
        tq, wq = _gauss(float(ta), float(tb), 12)
        pts.append(_r_of_t(tq, g))
        wts.append(wq * _dr_dt(tq, g))
        ts.append(tq)
    return np.concatenate(pts), np.concatenate(wts), np.concatenate(ts)


def _t_radial_rows(grid: QuadratureGrid, rho: np.ndarray, cauchy_only: bool = False) -> np.ndarray:
    """Product-integration radial rows for T (or the Cauchy transform).

    Returns R with shape (n_a, len(rho), n_r); mode array order follows FFT.
    For an input mode m the output mode is m - 1 with coefficient
        m <= 0:  2 int_0^rho (s/rho)^{1-m} f_m(s) ds
        m >= 1: -2 int_rho^1 (rho/s)^{m-1} f_m(s) ds + 2 rho^{m-1} int_0^1 s^{m+1} f_m(s) ds
    The second term of the m >= 1 case is the Bergman correction of k and is
    dropped for the plain Cauchy transform.
    """
    interp, _ = _lagrange(grid.key)
    n_r, n_a = grid.n_radial, grid.n_angular
    modes = _signed_modes(n_a)
    active = _active(modes, n_a)
    R = np.zeros((n_a, rho.size, n_r))
    s_nodes = grid.radii
    wr = grid.radial_weights
    for i, r in enumerate(rho):
        if r < 1e-14:
            # only the output mode 0 survives at the origin
            sq, wq, tq = _inner_rule(grid, 1.0)
            L = interp(tq)
            idx = np.nonzero(modes == 1)[0]
            if idx.size:
                row = -2 * (wq @ L)
                if not cauchy_only:
                    row = row + 2 * wr * s_nodes**2
                R[idx[0], i] = row
            continue
        si, wi, ti = _inner_rule(grid, r)
        Li = interp(ti) * wi[:, None]
        so, wo, to = _outer_rule(grid, r)
        Lo = interp(to) * wo[:, None]
        log_in = np.log(si / r)
        log_out = np.log(r / so)
        for mi, m in enumerate(modes):
            if not active[mi]:
                continue
            if m <= 0:
                R[mi, i] = 2 * (np.exp((1 - m) * log_in) @ Li)
            else:
                row = -2 * (np.exp((m - 1) * log_out) @ Lo)
                if not cauchy_only:
                    row = row + 2 * r ** (m - 1) * wr * s_nodes ** (m + 1)
                R[mi, i] = row
    return R


def _p_radial_rows(grid: QuadratureGrid, rho: np.ndarray) -> np.ndarray:
    """Output mode a = input mode a >= 0 with 2(a+1) rho^a int_0^1 s^{a+1} f_a ds."""
    n_a = grid.n_angular
    modes = _signed_modes(n_a)
    active = _active(modes, n_a) & (modes >= 0)
    R = np.zeros((n_a, rho.size, grid.n_radial))
    s = grid.radii
    wr = grid.radial_weights
    for mi, a in enumerate(modes):
        if active[mi]:
            R[mi] = 2 * (a + 1) * np.outer(rho**a, wr * s ** (a + 1))
    return R


# ---------------------------------------------------------------------------
# slot operators

@dataclass(frozen=True, eq=False)
class SlotOperator:
    radial: np.ndarray  # (n_a, n_r_out, n_r_in), complex or real
    phase: np.ndarray  # (n_r_out, n_a) output factor c_ip
    src_scale: np.ndarray | None = None  # (n_r, n_a)
    diagonal: np.ndarray | None = None  # (n_r, n_a)

    def apply_factor(self, values: np.ndarray) -> np.ndarray:
        """Apply to an array whose first two axes are (n_r, n_a)."""
        nr, na = values.shape[:2]
        rest = values.shape[2:]
        v = values.reshape(nr, na, -1)
        M = v.shape[2]
        out = np.empty((self.radial.shape[1], na, M), dtype=complex)
        chunk = max(1, (1 << 21) // (nr * na))
        for s in range(0, M, chunk):
            g = v[:, :, s:s + chunk]
            if self.src_scale is not None:
                g = g * self.src_scale[:, :, None]
            gh = np.fft.fft(g, axis=1).transpose(1, 0, 2)
            y = np.matmul(self.radial, gh).transpose(1, 0, 2)
            y = np.fft.ifft(y, axis=1)
            if self.diagonal is not None:
                y += self.diagonal[:, :, None] * g
            y *= self.phase[:, :, None]
            out[:, :, s:s + chunk] = y
        return out.reshape((self.radial.shape[1], na) + rest)


def _apply_slot(F: ScalarField, j: int, op: SlotOperator) -> ScalarField:
    ax = (2 * j, 2 * j + 1)
    moved = np.moveaxis(F.values, ax, (0, 1))
    out = op.apply_factor(moved)
    return ScalarField(F.grid, np.ascontiguousarray(np.moveaxis(out, (0, 1), ax)))


def _chart_scales(chart: DomainChart, grid: QuadratureGrid):
    if chart.is_disc:
        return None, None
    d = chart.derivative(grid.nodes)
    return d, 1.0 / d


@functools.lru_cache(maxsize=32)
def projection_operator(chart: DomainChart, grid: QuadratureGrid) -> SlotOperator:
    R = _p_radial_rows(grid, grid.radii)
    phase = np.ones(grid.shape, dtype=complex)
    d, inv = _chart_scales(chart, grid)
    if d is not None:
        phase = phase * inv
    return SlotOperator(R, phase, src_scale=d)


def _sampled_kernel_modes(grid: QuadratureGrid):
    """fft over the angle difference of k(r_i, s_k e^{-i theta_d}), coincident node zeroed."""
    from .domain import unit_disc_chart

    r = grid.radii
    th = grid.angles
    zt = r[:, None, None] + 0j
    ws = r[None, :, None] * np.exp(-1j * th)[None, None, :]
    zt, ws = np.broadcast_arrays(zt, ws)
    same = np.isclose(zt, ws, rtol=0, atol=0)
    safe_w = np.where(same, 0.5 * zt, ws)
    kap = kernel_k(unit_disc_chart(), zt, safe_w)
    kap = np.where(same, 0.0, kap)
    return kap


@functools.lru_cache(maxsize=32)
def solution_operator(chart: DomainChart, grid: QuadratureGrid, quadrature: str = "product") -> SlotOperator:
    n_r, n_a = grid.shape
    phase = np.exp(-1j * grid.angles)[None, :] * np.ones((n_r, 1))
    d, inv = _chart_scales(chart, grid)
    src = None if d is None else np.abs(d) ** 2
    if inv is not None:
        phase = phase * inv
    if quadrature == "product":
        R = _t_radial_rows(grid, grid.radii)
        return SlotOperator(R, phase, src_scale=src)
    kap = _sampled_kernel_modes(grid)  # (n_r, n_r, n_a)
    W = grid.radial_weights * grid.radii * 2 * np.pi / n_a
    R = np.fft.fft(kap, axis=2) * W[None, :, None]
    R = np.ascontiguousarray(R.transpose(2, 0, 1))
    diag = None
    if quadrature == "subtraction":
        rowsum = (kap.sum(axis=2) * W[None, :]).sum(axis=1)
        diag = np.repeat((grid.radii - rowsum)[:, None], n_a, axis=1)
    return SlotOperator(R, phase, src_scale=src, diagonal=diag)


# ---------------------------------------------------------------------------
# one-factor evaluation at arbitrary points

def _factor_values(f) -> np.ndarray:
    return np.asarray(getattr(f, "values", f), dtype=complex)


def _to_reference(chart: DomainChart, z):
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    zeta = map_inverse(chart, z)
    if np.any(np.abs(zeta) >= 1):
        raise ValueError("evaluation point outside the domain")
    return zeta


def _evaluate_modes(coeffs_at_rho: np.ndarray, zeta: np.ndarray, q: int, n_a: int) -> np.ndarray:
    """sum_m coeffs[m, t] exp(i (m + q) theta_t)."""
    modes = _signed_modes(n_a)
    th = np.angle(zeta)
    return np.sum(coeffs_at_rho * np.exp(1j * np.outer(modes + q, th)), axis=0)


def interpolate_factor(grid: QuadratureGrid, values, zeta) -> np.ndarray:
    """Trigonometric-in-angle, Lagrange-in-radius interpolant at reference points."""
    values = _factor_values(values).reshape(grid.shape)
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    interp, _ = _lagrange(grid.key)
    coeffs = np.fft.fft(values, axis=1) / grid.n_angular
    modes = _signed_modes(grid.n_angular)
    coeffs[:, ~_active(modes, grid.n_angular)] = 0
    L = interp(_t_of_r(np.abs(zeta), grid.grading_exponent))  # (targets, n_r)
    at = (L @ coeffs).T  # (n_a, targets)
    return _evaluate_modes(at, zeta, 0, grid.n_angular)


def t_apply(chart: DomainChart, grid: QuadratureGrid, f, z, config: SolverConfig = SolverConfig()):
    """T[f](z) for a single-factor field f at arbitrary points z of Omega."""
    zeta = _to_reference(chart, z)
    vals = _factor_values(f).reshape(grid.shape)
    jac = np.ones(grid.shape) if chart.is_disc else np.abs(chart.derivative(grid.nodes)) ** 2
    g = vals * jac
    tgt = np.ones(zeta.shape, dtype=complex) if chart.is_disc else 1.0 / chart.derivative(zeta)
    if config.quadrature == "product":
        R = _t_radial_rows(grid, np.abs(zeta))
        coeffs = np.fft.fft(g, axis=1) / grid.n_angular  # (n_r, n_a)
        at = np.einsum("mtk,km->mt", R, coeffs)
        out = _evaluate_modes(at, zeta, -1, grid.n_angular)
    else:
        nodes = grid.nodes.reshape(-1)
        W = grid.weights.reshape(-1)
        gv = g.reshape(-1)
        out = np.empty(zeta.shape, dtype=complex)
        for t, zt in enumerate(zeta):
            same = np.abs(nodes - zt) < 1e-13
            wsafe = np.where(same, 0.5 * zt + 0.1, nodes)
            kk = np.where(same, 0.0, kernel_k_disc(zt, wsafe))
            if config.quadrature == "naive":
                out[t] = np.sum(W * kk * gv)
            else:
                g0 = gv[same][0] if np.any(same) else interpolate_factor(grid, g, zt)[0]
                out[t] = np.conj(zt) * g0 + np.sum(W * kk * (gv - g0))
    res = out * tgt
    return res if np.ndim(z) else complex(res[0])


def kernel_k_disc(z, w):
    return (1 - np.abs(w) ** 2) / (np.pi * (z - w) * (1 - z * np.conj(w)))


def cauchy_transform(chart: DomainChart, grid: QuadratureGrid, f, z):
    """Area Cauchy transform (1/pi) int f(w) / (z - w) dA(w), product integrated.

    On a mapped chart the transform is pulled back to the disc:
        C_Omega f(z) = C_D[q(zeta, .) |psi'|^2 f o psi](zeta),
        q(a, b) = (a - b) / (psi(a) - psi(b)),
    with q(a, a) = 1/psi'(a); the data then depends on the target point.
    """
    zeta = _to_reference(chart, z)
    vals = _factor_values(f).reshape(grid.shape)
    R = _t_radial_rows(grid, np.abs(zeta), cauchy_only=True)
    out = np.empty(zeta.shape, dtype=complex)
    if chart.is_disc:
        coeffs = np.fft.fft(vals, axis=1) / grid.n_angular
        at = np.einsum("mtk,km->mt", R, coeffs)
        out = _evaluate_modes(at, zeta, -1, grid.n_angular)
    else:
        nodes = grid.nodes
        jac = np.abs(chart.derivative(nodes)) ** 2
        pz = chart.forward(zeta)
        pn = chart.forward(nodes)
        for t, zt in enumerate(zeta):
            diff = pz[t] - pn
            same = np.abs(zt - nodes) < 1e-13
            q = np.where(same, 1.0 / chart.derivative(nodes), (zt - nodes) / np.where(same, 1.0, diff))
            coeffs = np.fft.fft(q * jac * vals, axis=1) / grid.n_angular
            at = np.einsum("mk,km->m", R[:, t, :], coeffs)
            out[t] = _evaluate_modes(at[:, None], zeta[t:t + 1], -1, grid.n_angular)[0]
    return out if np.ndim(z) else complex(out[0])


# ---------------------------------------------------------------------------
# slice operators on tensor fields

def _slot_index(F: ScalarField, j: int) -> int:
    if not 1 <= j <= F.n:
        raise IndexError(f"slot {j} out of range 1..{F.n}")
    return j - 1


def p_slice(j: int, F: ScalarField) -> ScalarField:
    """One-variable Bergman projection in slot j (1-based)."""
    k = _slot_index(F, j)
    op = projection_operator(F.grid.charts[k], F.grid.factors[k])
    return _apply_slot(F, k, op)


def t_slice(j: int, F: ScalarField, config: SolverConfig = SolverConfig()) -> ScalarField:
    k = _slot_index(F, j)
    op = solution_operator(F.grid.charts[k], F.grid.factors[k], config.quadrature)
    return _apply_slot(F, k, op)


def solve_canonical(f: Form01Field, config: SolverConfig = SolverConfig()) -> ScalarField:
    """S[f] = sum_j T_j P_{j-1}...P_1 f_j (ascending) or T_j P_{j+1}...P_n f_j."""
    if not f.closed:
        raise NotClosedError("form is not labeled closed")
    tol = max(config.tolerance, f.closedness_tolerance)
    if f.closedness_residual > tol:
        raise NotClosedError(f"closedness residual {f.closedness_residual:.3e} exceeds {tol:.1e}")
    n = f.n
    total = np.zeros(f.grid.shape, dtype=complex)
    for j in range(1, n + 1):
        G = f.component(j)
        others = range(1, j) if config.ordering == ASCENDING else range(n, j, -1)
        for l in others:
            G = p_slice(l, G)
        total += t_slice(j, G, config).values
        del G
    return ScalarField(f.grid, total)


def dbar_residual(u: ScalarField, f: Form01Field, radius: float | None = None) -> float:
    """max over interior nodes and slots of |du/dzbar_j - f_j|."""
    from .oracle import slice_dbar

    mask = None if radius is None else region_mask(u.grid, radius)
    worst = 0.0
    for j in range(1, u.n + 1):
        d = np.abs(slice_dbar(u, j).values - f.coefficients[j - 1])
        if mask is not None:
            d = np.where(mask, d, np.nan)
        worst = max(worst, float(np.nanmax(d)))
    return worst


# ---------------------------------------------------------------------------
# Schur test

@dataclass(frozen=True)
class SchurResult:
    row_sum_max: float
    col_sum_max: float
    norm_estimate: float
    p: float

    @property
    def bound(self) -> float:
        return max(self.row_sum_max, self.col_sum_max)


def _dual(y, p):
    a = np.abs(y)
    if np.isinf(p):
        out = np.zeros_like(a)
        out[np.argmax(a)] = 1.0
        return out
    nrm = np.sum(a**p) ** (1 / p)
    if nrm == 0:
        return np.zeros_like(a)
    return (a / nrm) ** (p - 1)


def schur_check(kernel_matrix, weights_rows, weights_cols, p: float, iters: int = 200, seed: int = 0) -> SchurResult:
    """Weighted Schur sums and an L^p operator norm estimate.

    The operator is (Tf)_i = sum_j K_ij f_j wc_j from L^p(wc) to L^p(wr).
    For 1 < p < inf the norm is estimated with the nonlinear power method for
    nonnegative matrices; p = 1 and p = inf are the exact column/row sums.
    """
    K = np.asarray(kernel_matrix, dtype=float)
    wr = np.asarray(weights_rows, dtype=float).reshape(-1)
    wc = np.asarray(weights_cols, dtype=float).reshape(-1)
    if np.any(K < 0):
        raise ValueError("kernel entries must be nonnegative")
    if np.any(wr <= 0) or np.any(wc <= 0):
        raise ValueError("weights must be positive")
    if K.shape != (wr.size, wc.size):
        raise ValueError("kernel shape does not match the weights")
    p = float(p)
    if p < 1:
        raise ValueError("p must be >= 1")
    row = float(np.max(K @ wc))
    col = float(np.max(wr @ K))
    if p == 1:
        est = col
    elif np.isinf(p):
        est = row
    else:
        q = p / (p - 1)
        B = (wr[:, None] ** (1 / p)) * K * (wc[None, :] ** (1 / q))
        x = np.ones(wc.size) / wc.size ** (1 / p)
        est = 0.0
        for _ in range(iters):
            y = B @ x
            est_new = float(np.sum(y**p) ** (1 / p))
            z = B.T @ _dual(y, p)
            x = _dual(z, q)
            if abs(est_new - est) <= 1e-13 * max(est_new, 1e-300):
                est = est_new
                break
            est = est_new
    bound = max(row, col)
    if est > bound * (1 + 1e-6):
        raise AssertionError(f"power-iteration norm {est} exceeds Schur bound {bound}")
    return SchurResult(row, col, est, p)
