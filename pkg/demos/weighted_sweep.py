"""How ||S f|| / ||d^gamma f|| behaves as the weight exponent gamma grows.

The sup ratio should grow no faster than (1 - gamma)^(-2) on the bidisc.

    python3 demos/weighted_sweep.py
"""
from polydbar.experiments import ExperimentConfig, run_experiment

cfg = ExperimentConfig("estimate-sweep", gammas=(0.0, 0.25, 0.5, 0.75, 0.9), ps=(2.0, float("inf")))
res = run_experiment(cfg)
for key, v in res.summary.items():
    if key.startswith("gamma="):
        print(f"{key:<22} coarse {v['coarse']:.4f}  fine {v['fine']:.4f}  change {v['change']:.3f}")
print()
for g, v in res.summary["gamma_law"].items():
    print(f"gamma {g:<5} max ratio x (1 - gamma)^2 = {v:.4f}")
