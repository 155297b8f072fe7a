"""Analytic test forms with separable structure.

Every corpus function is a finite sum of products of one-variable factors,
``sum_t c_t prod_j phi_{t,j}(z_j)``.  This keeps grid evaluation, lattice
sup-norms and closed-form canonical answers cheap and exact.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .domain import DomainChart, QuadratureGrid, TensorGrid, build_disc_grid
from .fields import Form01Field

SELECTORS = ("polynomial", "exact-gradient", "kerzman-inner", "mollified")
MOLLIFIER_RADII = (0.9, 0.95, 0.99)
KERZMAN_RADIUS = 0.4  # FD residual region for inner-function forms
KERZMAN_DEVIATION_RADIUS = 0.9


def inner_function(lam):
    """Singular inner function exp((lam + 1) / (lam - 1))."""
    lam = np.asarray(lam, dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = np.exp((lam + 1) / (lam - 1))
    return np.where(np.isfinite(out), out, 0.0)


# ---------------------------------------------------------------------------
# one-variable factors: ("mono", a, b) = z^a zbar^b, ("inner", r) = inner(r zeta)

def _factor_values(spec: tuple, z: np.ndarray, zeta: np.ndarray) -> np.ndarray:
    if spec[0] == "mono":
        _, a, b = spec
        return z**a * np.conj(z) ** b
    if spec[0] == "inner":
        return inner_function(spec[1] * zeta)
    if spec[0] == "one":
        return np.ones_like(z)
    raise ValueError(f"unknown factor {spec!r}")


@dataclass(frozen=True)
class Separable:
    """sum over terms of coefficient times a product of per-slot factors."""

    n: int
    terms: tuple = ()  # ((coef, (spec_1, ..., spec_n)), ...)

    @staticmethod
    def from_monomials(n: int, poly: dict) -> "Separable":
        terms = tuple(
            (complex(c), tuple(("mono", e[2 * j], e[2 * j + 1]) for j in range(n)))
            for e, c in sorted(poly.items())
            if c != 0
        )
        return Separable(n, terms)

    def monomials(self) -> dict:
        out = {}
        for c, specs in self.terms:
            if any(s[0] != "mono" for s in specs):
                raise ValueError("not a polynomial")
            key = tuple(x for s in specs for x in s[1:])
            out[key] = out.get(key, 0) + c
        return out

    def __add__(self, other: "Separable") -> "Separable":
        return Separable(self.n, self.terms + other.terms)

    def evaluate(self, grid: TensorGrid) -> np.ndarray:
        out = np.zeros(grid.shape, dtype=complex)
        for c, specs in self.terms:
            term = c
            for j, s in enumerate(specs):
                term = term * grid.broadcast(j, _factor_values(s, grid.points(j), grid.factors[j].nodes))
            out = out + term
        return out

    def sup(self, grid: TensorGrid, weights=None, lattice: bool = True) -> float:
        """sup |F| over the nodes and, optionally, a refined cross lattice.

        ``weights`` is an optional per-slot list of callables w_j(z, zeta)
        multiplying the function (used for d(z_k)^gamma weights).
        """
        if not self.terms:
            return 0.0
        layouts = [list(_slot_samples(grid, j, refined=False)) for j in range(grid.n)]
        best = _sup_tensor(self, [l[0] for l in layouts], [l[1] for l in layouts], weights)
        if lattice:
            for k in range(grid.n):
                pts = [list(l) for l in layouts]
                pts[k] = list(_slot_samples(grid, k, refined=True))
                best = max(best, _sup_tensor(self, [p[0] for p in pts], [p[1] for p in pts], weights))
        return best


def _slot_samples(grid: TensorGrid, j: int, refined: bool):
    g = grid.factors[j]
    if refined:
        g = build_disc_grid(2 * g.n_radial, 2 * g.n_angular, g.grading_exponent)
    zeta = g.nodes.reshape(-1)
    return grid.charts[j].forward(zeta), zeta


def _sup_tensor(F: Separable, zs, zetas, weights) -> float:
    """max over the tensor product of sample sets via chunked factor products."""
    tables = []
    for c, specs in F.terms:
        row = []
        for j, s in enumerate(specs):
            v = _factor_values(s, zs[j], zetas[j])
            if weights is not None and weights[j] is not None:
                v = v * weights[j](zs[j], zetas[j])
            row.append(v)
        tables.append((c, row))
    n = F.n
    if n == 1:
        return float(np.abs(sum(c * r[0] for c, r in tables)).max())
    # first slot as rows, the remaining slots flattened as columns
    first = np.stack([c * r[0] for c, r in tables])  # (T, N1)
    rest = []
    for _, r in tables:
        m = r[1]
        for v in r[2:]:
            m = np.multiply.outer(m, v).reshape(-1)
        rest.append(m)
    rest = np.stack(rest)  # (T, N_rest)
    best = 0.0
    step = max(1, 2**22 // rest.shape[1])
    for a in range(0, first.shape[1], step):
        block = first[:, a:a + step].T @ rest
        best = max(best, float(np.abs(block).max()))
    return best


# ---------------------------------------------------------------------------
# polynomial calculus

def _dbar_poly(poly: dict, j: int) -> dict:
    out = {}
    for e, c in poly.items():
        b = e[2 * j + 1]
        if b:
            e2 = list(e)
            e2[2 * j + 1] -= 1
            out[tuple(e2)] = out.get(tuple(e2), 0) + b * c
    return out


def _project_poly(poly: dict, n: int, radius: float) -> dict:
    """Tensor Bergman projection of a polynomial on a product of discs of given radius."""
    out = {}
    for e, c in poly.items():
        coef = c
        e2 = []
        for j in range(n):
            a, b = e[2 * j], e[2 * j + 1]
            if a < b:
                coef = 0
                break
            coef *= (a - b + 1) / (a + 1) * radius ** (2 * b)
            e2 += [a - b, 0]
        if coef:
            out[tuple(e2)] = out.get(tuple(e2), 0) + coef
    return out


@functools.lru_cache(maxsize=None)
def bump_moment(k: int) -> float:
    """int |y|^{2k} chi(y) dA over the unit disc for the unit-mass bump chi."""
    prof = lambda s, p: s**p * math.exp(-1.0 / (1.0 - s * s)) if s < 1 else 0.0
    num = integrate.quad(prof, 0, 1, args=(2 * k + 1,), epsabs=0, epsrel=1e-13, limit=200)[0]
    den = integrate.quad(prof, 0, 1, args=(1,), epsabs=0, epsrel=1e-13, limit=200)[0]
    return num / den


def bump(y):
    """Unit-mass C-infinity bump c exp(-1 / (1 - |y|^2)) supported in the unit disc."""
    y = np.asarray(y, dtype=complex)
    s2 = np.abs(y) ** 2
    den = 2 * np.pi * integrate.quad(lambda s: s * math.exp(-1.0 / (1.0 - s * s)), 0, 1, epsrel=1e-13)[0]
    with np.errstate(divide="ignore", over="ignore"):
        out = np.where(s2 < 1, np.exp(-1.0 / np.where(s2 < 1, 1 - s2, 1.0)), 0.0)
    return out / den


def _mollify_poly(poly: dict, n: int, r: float, eps: float) -> dict:
    """Dilate by r, then convolve in each slot with the bump at scale eps."""
    out = {}
    for e, c in poly.items():
        parts = [[((), c * r ** sum(e))]]
        for j in range(n):
            a, b = e[2 * j], e[2 * j + 1]
            opts = [
                ((a - k, b - k), math.comb(a, k) * math.comb(b, k) * bump_moment(k) * eps ** (2 * k))
                for k in range(min(a, b) + 1)
            ]
            parts.append(opts)
        combos = parts[0]
        for opts in parts[1:]:
            combos = [(ex + o[0], cc * o[1]) for ex, cc in combos for o in opts]
        for ex, cc in combos:
            out[ex] = out.get(ex, 0) + cc
    return out


# ---------------------------------------------------------------------------
# corpus forms

def disc_radius(chart: DomainChart):
    """Radius R if the chart is zeta -> R zeta (R > 0), else None."""
    if chart.is_disc:
        return 1.0
    num = tuple(complex(c) for c in chart.numerator)
    den = tuple(complex(c) for c in chart.denominator)
    num = num + (0j,) * max(0, 2 - len(num))
    if (
        len(num) == 2
        and num[0] == 0
        and num[1].imag == 0
        and num[1].real > 0
        and den == (1 + 0j,)
    ):
        return num[1].real
    return None


@dataclass(frozen=True)
class CorpusForm:
    """Analytic description of a closed (0,1)-form and, when known, its canonical solution."""

    form_id: str
    family: str
    n: int
    components: tuple  # Separable per slot
    potential: dict | None = None  # polynomial g with f = dbar g
    kerzman_r: float | None = None
    residual_radius: float = 1.0
    params: dict = field(default_factory=dict)

    def sup_norm(self, grid: TensorGrid, lattice: bool = True) -> float:
        """max_j sup |f_j| over the nodes and a refined cross lattice."""
        return max(c.sup(grid, lattice=lattice) for c in self.components)

    def to_field(self, grid: TensorGrid, closedness_tolerance: float | None = None) -> Form01Field:
        from .fields import DEFAULT_TOLERANCE

        tol = DEFAULT_TOLERANCE if closedness_tolerance is None else closedness_tolerance
        return Form01Field(
            grid,
            [c.evaluate(grid) for c in self.components],
            closed=True,
            closedness_tolerance=tol,
            residual_radius=self.residual_radius,
            source=self,
        )

    def solution(self, grid: TensorGrid) -> Separable | None:
        """Closed-form canonical solution on products of (scaled) discs, else None."""
        radii = {disc_radius(c) for c in grid.charts}
        if None in radii or len(radii) != 1:
            return None
        R = radii.pop()
        if self.potential is not None:
            g = self.potential
            u = dict(g)
            for e, c in _project_poly(g, self.n, R).items():
                u[e] = u.get(e, 0) - c
            return Separable.from_monomials(self.n, {e: c for e, c in u.items() if abs(c) > 0})
        if self.kerzman_r is not None and R == 1.0:
            r = self.kerzman_r
            return Separable(2, (
                (1 + 0j, (("mono", 0, 1), ("inner", r))),
                (1 + 0j, (("inner", r), ("mono", 0, 1))),
            ))
        return None


def _from_potential(form_id, family, n, g, **kw) -> CorpusForm:
    comps = tuple(Separable.from_monomials(n, _dbar_poly(g, j)) for j in range(n))
    return CorpusForm(form_id, family, n, comps, potential=g, **kw)


def _mono(n, *pairs):
    e = [0] * (2 * n)
    for j, (a, b) in enumerate(pairs):
        e[2 * j], e[2 * j + 1] = a, b
    return tuple(e)


def _named_potentials(n: int) -> list:
    if n == 1:
        items = [("zb", {(0, 1): 1}), ("zb2", {(0, 2): 1}), ("abs2", {(1, 1): 1}), ("z_abs2", {(2, 1): 1})]
    elif n == 2:
        items = [
            ("zb1zb2", {_mono(2, (0, 1), (0, 1)): 1}),
            ("zb1^2z2", {_mono(2, (0, 2), (1, 0)): 1}),
            ("abs2z1_zb2", {_mono(2, (1, 1), (0, 1)): 1}),
            ("abs2z1_z2", {_mono(2, (1, 1), (1, 0)): 1}),
            ("abs2z1_abs2z2", {_mono(2, (1, 1), (1, 1)): 1}),
            ("zb1", {_mono(2, (0, 1), (0, 0)): 1}),
        ]
    else:
        items = [
            ("zb1zb2zb3", {_mono(3, (0, 1), (0, 1), (0, 1)): 1}),
            ("abs2z1_zb3", {_mono(3, (1, 1), (0, 0), (0, 1)): 1}),
        ]
    return items


def _random_potential(rng: np.random.Generator, n: int) -> dict:
    """1-3 terms with per-slot total degree <= 2, not holomorphic, unit l1 coefficients."""
    per_slot = [(a, b) for a in range(3) for b in range(3) if a + b <= 2]
    g = {}
    n_terms = int(rng.integers(1, 4))
    while len(g) < n_terms:
        e = tuple(x for _ in range(n) for x in per_slot[int(rng.integers(len(per_slot)))])
        if all(e[2 * j + 1] == 0 for j in range(n)):
            continue
        g[e] = complex(rng.normal(), rng.normal())
    total = sum(abs(c) for c in g.values())
    return {e: c / total for e, c in g.items()}


def corpus_forms(selector: str, n: int, seed: int = 0, count: int | None = None) -> list:
    """Analytic corpus descriptions; see :func:`corpus_generate`."""
    if selector not in SELECTORS:
        raise ValueError(f"unknown corpus selector {selector!r}; expected one of {SELECTORS}")
    if n not in (1, 2, 3):
        raise ValueError("n must be 1, 2 or 3")
    rng = np.random.default_rng(seed)
    if selector == "polynomial":
        count = 10 if count is None else count
        return [_from_potential(f"poly-{seed}-{i}", selector, n, _random_potential(rng, n)) for i in range(count)]
    if selector == "exact-gradient":
        named = [_from_potential(f"grad-{name}", selector, n, g) for name, g in _named_potentials(n)]
        named.append(_from_potential("grad-zero", selector, n, {}))
        count = 10 if count is None else count
        out = named[:count]
        i = 0
        while len(out) < count:
            out.append(_from_potential(f"grad-{seed}-{i}", selector, n, _random_potential(rng, n)))
            i += 1
        return out
    if selector == "kerzman-inner":
        return [_kerzman(1.0)]
    # mollified: polynomial bases and the inner-function form, each at r in MOLLIFIER_RADII
    count = 3 if count is None else count
    bases = [_random_potential(rng, n) for _ in range(count)]
    out = []
    for r in MOLLIFIER_RADII:
        eps = (1 - r) / 2
        for i, g in enumerate(bases):
            out.append(_from_potential(
                f"moll-{seed}-{i}-r{r}", selector, n, _mollify_poly_potential(g, n, r, eps),
                params={"r": r, "eps": eps, "base": i},
            ))
        if n == 2:
            out.append(_kerzman(r))
    return out


def _mollify_poly_potential(g: dict, n: int, r: float, eps: float) -> dict:
    # dbar commutes with convolution, and dbar[g(r.)] = r (dbar g)(r.)
    return {e: c / r for e, c in _mollify_poly(g, n, r, eps).items()}


def mollified_form(base: CorpusForm, r: float) -> CorpusForm:
    """F_r = f(r .) * chi_eps with eps = (1 - r) / 2 for a polynomial-potential form."""
    if base.potential is None:
        raise ValueError("mollification needs a polynomial potential")
    eps = (1 - r) / 2
    g = _mollify_poly_potential(base.potential, base.n, r, eps)
    return _from_potential(f"{base.form_id}-r{r}", "mollified", base.n, g, params={"r": r, "eps": eps})


def _kerzman(r: float) -> CorpusForm:
    """f_1(z_2) dzbar_1 + f_2(z_1) dzbar_2 with the inner function dilated by r.

    Convolving a holomorphic function with a radial bump leaves it unchanged,
    so the mollified form equals the dilated one.
    """
    comps = (
        Separable(2, ((1 + 0j, (("one",), ("inner", r))),)),
        Separable(2, ((1 + 0j, (("inner", r), ("one",))),)),
    )
    fid = "kerzman" if r == 1.0 else f"kerzman-r{r}"
    family = "kerzman-inner" if r == 1.0 else "mollified"
    return CorpusForm(fid, family, 2, comps, kerzman_r=r, residual_radius=KERZMAN_RADIUS, params={"r": r})


def corpus_generate(selector: str, n: int, seed: int, grid: TensorGrid, count: int | None = None) -> list:
    """Sample a corpus family on a tensor grid as closed Form01Fields.

    ``form.source`` holds the analytic :class:`CorpusForm`.
    """
    if grid.n != n:
        raise ValueError("grid dimension does not match n")
    if selector == "kerzman-inner" and n != 2:
        raise ValueError("the inner-function family is defined for n = 2")
    return [c.to_field(grid) for c in corpus_forms(selector, n, seed, count)]
