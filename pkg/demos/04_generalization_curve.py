"""Test accuracy against training fraction for two tasks mod 11.

A coarse grid keeps this to about half a minute; the CLI `sweep` command
runs the full default grid.

Run: python demos/04_generalization_curve.py
"""
from hypercube import TrainConfig, make_modular
from hypercube.complexity import generalization_sweep

cfg = TrainConfig(lr=0.25, max_steps=5000, log_every=50)
fractions = [0.2, 0.35, 0.5, 0.65, 0.8]
for kind in ("add", "quad2"):
    res = generalization_sweep(make_modular(kind, 11), "hypercube", fractions, seeds=[0, 1], config=cfg)
    curve = "  ".join(f"{f:.2f}:{sum(v) / len(v):.2f}" for f, v in res.accuracy_grid().items())
    print(f"{kind:6s} AUC={res.auc:.3f}   {curve}")
