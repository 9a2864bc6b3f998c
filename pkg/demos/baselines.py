"""
TENG against TDVP and OBTI
==========================

Run all five methods for a few heat steps from one shared fit and compare
the per-step fitting losses each method leaves behind.
"""
from teng.bench.config import config_from_dict
from teng.bench.runner import run_benchmark

cfg = config_from_dict({
    "pde": {"kind": "heat"}, "ic": "two_dim_exp",
    "method": {"name": "TengEuler"}, "time": {"dt": 0.01, "T": 0.03},
    "net": {"n_layers": 3, "hidden": 12, "embed_terms": 8},
    "grid": {"n_per_dim": 32},
    "fit": {"stage1_max_iter": 150, "stage2_max_iter": 30},
    "reference": {"kmax": 16, "sample_n": 128},
})

results = run_benchmark(cfg, ["TengEuler", "TengHeun", "TengRk4", "TdvpRk4", "ObtiAdam"],
                        "out/demo_baselines")
for name, res in results.items():
    losses = ", ".join(f"{row[2]:.1e}" for row in res.rows)
    print(f"{name:<10} global rel L2 {res.global_rel_l2:.2e}  step losses {losses}")
