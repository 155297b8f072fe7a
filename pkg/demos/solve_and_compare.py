"""Solve dbar u = f on the bidisc for a few corpus forms and compare three answers.

For each form we print the solver's residual, its largest holomorphic moment,
the gap to the closed-form canonical solution and the gap to the independent
oracle (staircase solution followed by a truncated Bergman projection).

    python3 demos/solve_and_compare.py
"""
import numpy as np

from polydbar import TruncatedBasis, build_disc_grid, canonical_oracle, dbar_residual, solve_canonical, tensor_grid
from polydbar.corpus import corpus_forms
from polydbar.fields import monomial_moments

grid = tensor_grid(2, build_disc_grid(16, 32))
print(f"grid {grid.label()}")
print(f"{'form':<18}{'residual':>11}{'moment':>11}{'vs exact':>11}{'vs oracle':>11}")
for desc in corpus_forms("exact-gradient", 2, count=4) + corpus_forms("polynomial", 2, count=2):
    f = desc.to_field(grid)
    u = solve_canonical(f)
    exact = desc.solution(grid).evaluate(grid)
    oracle = canonical_oracle(f, TruncatedBasis(10))
    print(f"{desc.form_id:<18}"
          f"{dbar_residual(u, f):11.1e}"
          f"{np.max(np.abs(monomial_moments(u, 8))):11.1e}"
          f"{np.max(np.abs(u.values - exact)):11.1e}"
          f"{np.max(np.abs(u.values - oracle.values)):11.1e}")
