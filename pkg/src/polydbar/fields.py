"""Scalar fields and (0,1)-forms sampled on tensor grids."""
from __future__ import annotations

import numpy as np

from .domain import TensorGrid

DEFAULT_TOLERANCE = 5e-3


class NotClosedError(ValueError):
    """A (0,1)-form labeled closed fails the closedness check."""


class ScalarField:
    """Complex samples of a function on Omega^n at the tensor nodes."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: TensorGrid, values):
        values = np.asarray(values, dtype=complex)
        if values.shape != grid.shape:
            raise ValueError(f"field shape {values.shape} does not match grid shape {grid.shape}")
        values.setflags(write=False)
        self.grid = grid
        self.values = values

    @property
    def n(self) -> int:
        return self.grid.n

    def _wrap(self, other):
        if isinstance(other, ScalarField):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return ScalarField(self.grid, self.values + self._wrap(other))

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - self._wrap(other))

    def __mul__(self, c):
        return ScalarField(self.grid, self.values * self._wrap(c))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.values)

    def sup(self, region: np.ndarray | None = None) -> float:
        v = np.abs(self.values)
        if region is not None:
            v = np.where(region, v, 0.0)
        return float(np.nanmax(v))


def slot_weights(grid: TensorGrid) -> list:
    return [grid.area_weights(j) for j in range(grid.n)]


def contract_slots(values: np.ndarray, grid: TensorGrid, mats: list) -> np.ndarray:
    """Contract each slot's (n_r, n_a) node axes with a matrix (m_j, n_r*n_a)."""
    out = values
    for j in range(grid.n):
        g = grid.factors[j]
        out = out.reshape(out.shape[:j] + (g.size,) + out.shape[j + 2:])
        out = np.moveaxis(np.tensordot(mats[j], out, axes=([1], [j])), 0, j)
    return out


def inner(F: ScalarField, G) -> complex:
    """L^2(Omega^n) inner product <F, G> by tensor quadrature."""
    gv = G.values if isinstance(G, ScalarField) else np.asarray(G)
    prod = F.values * np.conj(gv)
    mats = [w.reshape(1, -1) for w in slot_weights(F.grid)]
    return complex(contract_slots(prod, F.grid, mats).ravel()[0])


def lp_norm(F, p: float, grid: TensorGrid | None = None) -> float:
    values = F.values if isinstance(F, ScalarField) else np.asarray(F)
    grid = F.grid if isinstance(F, ScalarField) else grid
    if np.isinf(p):
        return float(np.nanmax(np.abs(values)))
    mats = [w.reshape(1, -1) for w in slot_weights(grid)]
    total = contract_slots(np.abs(values) ** p + 0j, grid, mats).ravel()[0].real
    return float(total ** (1.0 / p))


def monomial_moments(F: ScalarField, degree: int) -> np.ndarray:
    """Array of <F, z_1^{a_1} ... z_n^{a_n}> for 0 <= a_i <= degree."""
    mats = []
    for j in range(F.n):
        z = F.grid.points(j).reshape(-1)
        w = F.grid.area_weights(j).reshape(-1)
        powers = np.arange(degree + 1)[:, None]
        mats.append(np.conj(z[None, :] ** powers) * w[None, :])
    return contract_slots(F.values, F.grid, mats)


def region_mask(grid: TensorGrid, radius: float) -> np.ndarray:
    """Boolean tensor mask of nodes with |zeta_j| <= radius in every slot."""
    mask = np.ones(grid.shape, dtype=bool)
    for j, g in enumerate(grid.factors):
        inside = np.broadcast_to((g.radii <= radius + 1e-12)[:, None], g.shape)
        mask = mask & grid.broadcast(j, inside)
    return mask


class Form01Field:
    """f = sum_j f_j dzbar_j sampled on a tensor grid.

    At construction the closedness residual max |df_i/dzbar_j - df_j/dzbar_i|
    is computed with finite differences over interior nodes whose reference
    radii are at most ``residual_radius`` in every slot.  A form labeled
    closed whose residual exceeds ``closedness_tolerance`` is rejected.
    """

    def __init__(
        self,
        grid: TensorGrid,
        coefficients,
        closed: bool = True,
        closedness_tolerance: float = DEFAULT_TOLERANCE,
        residual_radius: float = 1.0,
        source=None,
        check: bool = True,
    ):
        coefficients = list(coefficients)
        if len(coefficients) != grid.n:
            raise ValueError(f"need {grid.n} coefficients, got {len(coefficients)}")
        for k, c in enumerate(coefficients):
            c = np.asarray(c, dtype=complex)
            try:
                c = np.array(np.broadcast_to(c, grid.shape))
            except ValueError:
                raise ValueError(f"coefficient shape {c.shape} does not match grid {grid.shape}") from None
            c.setflags(write=False)
            coefficients[k] = c
        self.grid = grid
        self.coefficients = coefficients
        self.closed = closed
        self.closedness_tolerance = float(closedness_tolerance)
        self.residual_radius = float(residual_radius)
        self.source = source
        self.closedness_residual = self._closedness() if check else float("nan")
        if closed and check and self.closedness_residual > self.closedness_tolerance:
            raise NotClosedError(
                f"closedness residual {self.closedness_residual:.3e} exceeds "
                f"tolerance {self.closedness_tolerance:.1e}"
            )

    @property
    def n(self) -> int:
        return self.grid.n

    def component(self, j: int) -> ScalarField:
        """Coefficient of dzbar_j (1-based)."""
        return ScalarField(self.grid, self.coefficients[j - 1])

    def _closedness(self) -> float:
        from .oracle import slice_dbar

        if self.n == 1:
            return 0.0
        mask = region_mask(self.grid, self.residual_radius)
        worst = 0.0
        for i in range(1, self.n + 1):
            for j in range(i + 1, self.n + 1):
                a = slice_dbar(self.component(i), j).values
                b = slice_dbar(self.component(j), i).values
                d = np.abs(a - b)
                d = np.where(mask, d, np.nan)
                with np.errstate(invalid="ignore"):
                    val = np.nanmax(d) if np.any(np.isfinite(d)) else 0.0
                worst = max(worst, float(val))
        return worst

    def scaled(self, c: complex) -> "Form01Field":
        return Form01Field(
            self.grid,
            [c * f for f in self.coefficients],
            closed=self.closed,
            closedness_tolerance=self.closedness_tolerance * max(1.0, abs(c)),
            residual_radius=self.residual_radius,
            source=self.source,
        )

    def sup(self) -> float:
        """max_j sup |f_j| over the nodes."""
        return max(float(np.max(np.abs(f))) for f in self.coefficients)
