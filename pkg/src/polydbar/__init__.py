"""Canonical solutions of the Cauchy-Riemann equations on polydisc-type products.

Modules: ``domain`` (charts and quadrature grids), ``kernels`` (closed-form
kernels and the sampled inequality registry), ``fields`` and ``operators``
(the slot-wise solver), ``oracle`` (an independent reference solver),
``corpus`` (test forms with known answers) and ``experiments`` (batch runs
and reports).
"""

__version__ = "0.1.0"

from .domain import (  # noqa: E402
    DomainChart,
    NAMED_CHARTS,
    NonConvergence,
    OutsideDomain,
    QuadratureGrid,
    TensorGrid,
    boundary_distance,
    build_disc_grid,
    load_chart,
    map_inverse,
    parse_grid,
    tensor_grid,
)
from .fields import Form01Field, NotClosedError, ScalarField, lp_norm, monomial_moments  # noqa: E402
from .kernels import (  # noqa: E402
    EstimateReport,
    KernelBoundSpec,
    bergman_kernel,
    green,
    kernel_k,
    registered_bound,
    registered_bounds,
    verify_bound,
)
from .operators import SolverConfig, dbar_residual, p_slice, schur_check, solve_canonical, t_slice  # noqa: E402
from .oracle import StaircaseError, TruncatedBasis, canonical_oracle, slice_dbar, staircase_solution  # noqa: E402
from .corpus import corpus_forms, corpus_generate  # noqa: E402
from .fieldio import read_field, write_field  # noqa: E402

__all__ = [name for name in dir() if not name.startswith("_")]
