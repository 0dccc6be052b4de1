"""Learning the S3 multiplication table from 60% of its cells.

Run: python demos/01_learn_s3.py
"""
from hypercube import TrainConfig, make_symmetric, split_cells, train

# %% The table: 6 permutations of three symbols, composed right to left.
op = make_symmetric(3)
print("S3 table, rows a, columns b, entry a*b")
print(op.table)

# %% Hold out 40% of the cells.
split = split_cells(op, 0.6, seed=0)
print(f"\ntraining on {len(split.train_cells)} of 36 cells")

# %% Train with the hypercube regularizer, then without any regularizer.
for reg in ("hypercube", "none"):
    res = train(op, split, TrainConfig(reg_kind=reg, seed=0, max_steps=5000))
    f = res.final
    print(f"\n{reg:9s} status={res.status} steps={res.steps}")
    print(f"          train_loss={f.train_loss:.2e} test_loss={f.test_loss:.2e} test_acc={f.test_acc:.3f}")
    if res.fired_step is not None:
        r = res.fired_record
        print(f"          scheduler fired at step {res.fired_step}: imbalance={r.imbalance_agg:.1e}, "
              f"H={r.h_value:.2f}")

# %% The trajectory: under eps the fit settles on a scaled-down balanced solution,
# then the loss collapses once the scheduler switches eps off.
res = train(op, split, TrainConfig(seed=0, log_every=50))
print("\nstep  train_loss  test_acc  H")
for r in res.trajectory[::2]:
    print(f"{r.step:5d} {r.train_loss:10.2e} {r.test_acc:8.3f} {r.h_value:8.2f}")
