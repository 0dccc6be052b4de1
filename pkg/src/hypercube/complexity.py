"""The complexity metric H* and fraction-by-seed generalization sweeps.

H* is the smallest regularizer value among factorizations that fit the
full table.  It is estimated by training on every cell with the
epsilon-scheduler and reading ``h_reg`` off the final factors, keeping the
best of several restarts.  Sweeps train one model per (fraction, seed)
grid point and summarize test accuracy by its mean over the grid (AUC).
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .optable import OpTable, full_split, split_cells
from .training import TrainConfig, h_reg, train

log = logging.getLogger(__name__)

VARIANTS = ("hypercube", "hypercube_se", "l2", "none")

#: Fractions 0.05, 0.10, ..., 0.95.
DEFAULT_FRACTIONS = tuple(round(0.05 * i, 2) for i in range(1, 20))
DEFAULT_SEEDS = (0, 1, 2)

WORKERS_ENV = "HYPERCUBE_WORKERS"

SWEEP_COLUMNS = ("kind", "variant", "fraction", "seed", "steps", "converged", "test_acc", "h_final")


def default_workers() -> int:
    """Worker count from ``HYPERCUBE_WORKERS`` (default 1)."""
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        w = int(raw)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if w < 1:
        raise ValueError(f"{WORKERS_ENV} must be >= 1, got {w}")
    return w


def hstar_config(tied: bool = False, **overrides) -> TrainConfig:
    """Training settings for full-table H* estimation.

    On the full table the scale mode of the dynamics has curvature about
    ``6 eta`` (``18 eta`` when tied), so heavy ball with ``mu = 0.5`` needs
    ``eta < 0.5`` (``eta < 1/6`` tied) to settle.  The defaults leave margin.
    """
    base = dict(lr=0.1 if tied else 0.25, eps=0.1, tied=tied, max_steps=30000, log_every=10)
    base.update(overrides)
    return TrainConfig(**base)


def variant_config(variant: str, config: TrainConfig) -> TrainConfig:
    """Map a model variant name onto the matching training settings."""
    if variant == "hypercube":
        return config.replace(reg_kind="hypercube", tied=False)
    if variant == "hypercube_se":
        return config.replace(reg_kind="hypercube", tied=True)
    if variant == "l2":
        return config.replace(reg_kind="l2", tied=False)
    if variant == "none":
        return config.replace(reg_kind="none", tied=False)
    raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


@dataclass(frozen=True)
class RestartOutcome:
    seed: int
    status: str
    steps: int
    h_value: float
    fit_residual: float


@dataclass(frozen=True)
class ComplexityEstimate:
    """Best-of-restarts H*; ``h_star`` is ``None`` when no restart fit the table."""

    h_star: float | None
    fit_residual: float
    converged: bool
    kind: str = ""
    tied: bool = False
    restarts: tuple[RestartOutcome, ...] = ()


def estimate_hstar(op: OpTable, config: TrainConfig | None = None, restarts: int = 3,
                   fit_tol: float = 1e-8, seed0: int = 0) -> ComplexityEstimate:
    """Estimate H* for a table by training on all of its defined cells.

    Each restart uses seed ``seed0 + r``.  A restart counts when the
    scheduler fired and the final full-table loss is below ``fit_tol``.
    The smallest ``h_reg`` over counting restarts is returned, together
    with that run's residual loss.
    """
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    if config is None:
        config = hstar_config()
    config = config.replace(reg_kind="hypercube")
    split = full_split(op)
    outcomes = []
    for r in range(restarts):
        res = train(op, split, config.replace(seed=seed0 + r))
        fit = res.final.train_loss if res.trajectory else float("inf")
        h = h_reg(res.params) if res.status != "diverged" else float("nan")
        outcomes.append(RestartOutcome(seed0 + r, res.status, res.steps, h, fit))
        log.info("H* restart %d on %s: status=%s h=%.6g fit=%.3g", r, op.kind, res.status, h, fit)

    good = [o for o in outcomes if o.status == "converged" and o.fit_residual < fit_tol]
    if not good:
        best_fit = min((o.fit_residual for o in outcomes), default=float("inf"))
        return ComplexityEstimate(None, best_fit, False, op.kind, config.tied, tuple(outcomes))
    best = min(good, key=lambda o: o.h_value)
    return ComplexityEstimate(best.h_value, best.fit_residual, True, op.kind, config.tied, tuple(outcomes))


@dataclass(frozen=True)
class SweepRow:
    kind: str
    variant: str
    fraction: float
    seed: int
    steps: int
    converged: bool
    test_acc: float
    h_final: float
    status: str = ""
    test_empty: bool = False  # accuracy 1.0 by convention


@dataclass
class SweepResult:
    kind: str
    variant: str
    rows: list[SweepRow] = field(default_factory=list)

    @property
    def fractions(self) -> list[float]:
        return sorted({r.fraction for r in self.rows})

    def accuracy_grid(self) -> dict[float, list[float]]:
        grid: dict[float, list[float]] = {}
        for r in self.rows:
            grid.setdefault(r.fraction, []).append(r.test_acc)
        return {f: grid[f] for f in sorted(grid)}

    def mean_curve(self) -> tuple[np.ndarray, np.ndarray]:
        grid = self.accuracy_grid()
        return np.array(list(grid)), np.array([np.mean(v) for v in grid.values()])

    @property
    def auc(self) -> float:
        """Mean over fractions of the mean-over-seeds test accuracy."""
        return auc_from_rows(self.rows)


def auc_from_rows(rows) -> float:
    grid: dict[float, list[float]] = {}
    for r in rows:
        grid.setdefault(float(r.fraction), []).append(float(r.test_acc))
    if not grid:
        raise ValueError("no rows to summarize")
    return float(np.mean([np.mean(v) for v in grid.values()]))


def _run_point(op: OpTable, variant: str, fraction: float, seed: int, config: TrainConfig) -> SweepRow:
    cfg = variant_config(variant, config).replace(seed=seed)
    split = split_cells(op, fraction, seed)
    res = train(op, split, cfg)
    if res.status == "diverged" or not res.trajectory:
        return SweepRow(op.kind, variant, fraction, seed, res.steps, False, 0.0, float("nan"), res.status,
                        not split.test_mask.any())
    final = res.final
    return SweepRow(
        kind=op.kind, variant=variant, fraction=fraction, seed=seed, steps=res.steps,
        converged=res.status == "converged", test_acc=final.test_acc, h_final=h_reg(res.params),
        status=res.status, test_empty=not split.test_mask.any(),
    )


def _run_point_packed(args):
    return _run_point(*args)


def generalization_sweep(op: OpTable, variant: str, fractions=DEFAULT_FRACTIONS, seeds=DEFAULT_SEEDS,
                         config: TrainConfig | None = None, workers: int | None = None) -> SweepResult:
    """Train one model per (fraction, seed) and collect final test accuracy.

    The split and the initialization of a grid point both use its seed.
    Rows come back sorted by (fraction, seed) whatever the worker count,
    and a diverged point is recorded with accuracy 0 rather than stopping
    the sweep.
    """
    fractions = [float(f) for f in fractions]
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ValueError("need at least one seed")
    if not fractions:
        raise ValueError("need at least one fraction")
    for f in fractions:
        if not (0.0 < f <= 1.0):
            raise ValueError(f"fraction must be in (0, 1], got {f}")
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if config is None:
        config = TrainConfig()
    if workers is None:
        workers = default_workers()

    jobs = [(op, variant, f, s, config) for f in fractions for s in seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_point_packed, jobs))
    else:
        rows = [_run_point_packed(j) for j in jobs]
    rows.sort(key=lambda r: (r.fraction, r.seed))
    return SweepResult(op.kind, variant, rows)


def tie_ranks(values, rtol: float = 0.01) -> np.ndarray:
    """Average ranks where values within ``rtol`` (relative) are tied.

    Sorted values are chained into one group while each is within ``rtol``
    of the group's first member.
    """
    x = np.asarray(values, dtype=float)
    order = np.argsort(x, kind="stable")
    labels = np.empty(len(x))
    group_start = None
    label = -1
    for idx in order:
        v = x[idx]
        if group_start is None or abs(v - group_start) > rtol * max(abs(group_start), abs(v)):
            group_start = v
            label += 1
        labels[idx] = label
    return stats.rankdata(labels)


def spearman(h_values, aucs, rtol: float = 0.01) -> float:
    """Rank correlation between complexity and AUC.

    H* estimates are numerical minima, so values within ``rtol`` of each
    other are treated as tied before ranking.  AUCs are ranked exactly.
    """
    h_values = np.asarray(h_values, dtype=float)
    aucs = np.asarray(aucs, dtype=float)
    if h_values.shape != aucs.shape or h_values.ndim != 1:
        raise ValueError("h_values and aucs must be 1-D and the same length")
    if len(h_values) < 2:
        raise ValueError("need at least two tasks")
    rh = tie_ranks(h_values, rtol)
    ra = stats.rankdata(aucs)
    if np.all(rh == rh[0]) or np.all(ra == ra[0]):
        return float("nan")
    return float(np.corrcoef(rh, ra)[0, 1])
