"""The inner-function form on the bidisc: bounded data, a bounded solution, no continuity.

f = f1(z2) dz1bar + f2(z1) dz2bar with f_j the singular inner function
exp((z+1)/(z-1)).  Its canonical solution is conj(z1) f1(z2) + conj(z2) f2(z1),
so the sup norm at most doubles; near z2 = 1 the solution keeps oscillating.

    python3 demos/kerzman_counterexample.py     # about 20 s, 2.5 GB
"""
from polydbar.experiments import ExperimentConfig, run_experiment

res = run_experiment(ExperimentConfig("counterexample"))
s = res.summary
print(f"grid             {res.records[0].grid}")
print(f"sup |f|          {s['f_sup']:.4f}")
print(f"sup |S f|        {s['s_sup']:.4f}")
print(f"ratio            {s['ratio']:.4f}   (limit 2)")
print(f"|S f - u0| |z|<.9 {s['deviation']:.2e}")
print(f"oscillation      {s['oscillation']:.3f} on the grid, {s['oscillation_analytic']:.3f} along a horocycle")
for c in res.checks:
    print(("PASS " if c.passed else "FAIL ") + c.name)
