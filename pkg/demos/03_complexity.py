"""The smallest regularizer value that fits a full table.

Group tables reach 3 n^2.  Subtraction does so too with separate factors,
but pays more once one embedding is shared for rows, columns and outputs.

Run: python demos/03_complexity.py   (about a minute)
"""
from hypercube import make_modular, make_symmetric
from hypercube.complexity import estimate_hstar, hstar_config

cases = [
    ("add mod 6", make_modular("add", 6), False),
    ("S3", make_symmetric(3), False),
    ("sub mod 6", make_modular("sub", 6), False),
    ("sub mod 6 shared embedding", make_modular("sub", 6), True),
    ("quad1 mod 6", make_modular("quad1", 6), False),
]
print(f"{'table':28s} {'H*':>9s} {'3n^2':>6s}")
for name, op, tied in cases:
    est = estimate_hstar(op, hstar_config(tied=tied), restarts=2)
    h = "n/a" if est.h_star is None else f"{est.h_star:9.3f}"
    print(f"{name:28s} {h:>9s} {3 * op.n**2:6d}")
