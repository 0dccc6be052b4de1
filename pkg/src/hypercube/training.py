"""Losses, regularizers, analytic gradients and the momentum training loop."""

from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import diagnostics
from .optable import DataSplit, OpTable
from .tensor import ModelParams, eval_full, frobenius_sq, gram_sums, init_factors, pair_products

log = logging.getLogger(__name__)

REG_KINDS = ("none", "l2", "hypercube")

TRAJECTORY_COLUMNS = (
    "step",
    "train_loss",
    "test_loss",
    "train_acc",
    "test_acc",
    "imbalance_agg",
    "c_unitarity_dev",
    "s_unitarity_dev",
    "h_value",
    "frobenius_sq",
    "active_eps",
)


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 0.5
    momentum: float = 0.5
    reg_kind: str = "hypercube"
    eps: float = 0.1
    scheduler_threshold: float = 1e-5
    # tied models: stationary points need not be balanced, so the scheduler
    # also fires when the gradient norm drops below this
    tied_grad_threshold: float = 1e-6
    max_steps: int = 50_000
    log_every: int = 10
    seed: int = 0
    tied: bool = False
    stop_loss: float = 1e-10
    diverge_loss: float = 1e12

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if not (0 <= self.momentum < 1):
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.eps < 0:
            raise ValueError(f"eps must be >= 0, got {self.eps}")
        if self.reg_kind not in REG_KINDS:
            raise ValueError(f"reg_kind must be one of {REG_KINDS}, got {self.reg_kind!r}")
        if self.max_steps < 0 or self.log_every < 1:
            raise ValueError("max_steps must be >= 0 and log_every >= 1")

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class OptimState:
    velocity: tuple[np.ndarray, ...]
    step: int = 0
    scheduler_fired: bool = False

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "OptimState":
        return cls(tuple(np.zeros_like(x) for x in params.free()))


@dataclass(frozen=True)
class TrajectoryRecord:
    step: int
    train_loss: float
    test_loss: float
    train_acc: float
    test_acc: float
    imbalance_agg: float
    c_unitarity_dev: float
    s_unitarity_dev: float
    h_value: float
    frobenius_sq: float
    active_eps: float

    def as_row(self) -> list:
        return [getattr(self, c) for c in TRAJECTORY_COLUMNS]


@dataclass
class TrainResult:
    params: ModelParams
    trajectory: list[TrajectoryRecord]
    status: str  # "converged" | "max_steps" | "diverged"
    steps: int
    fired_step: int | None = None
    fired_record: TrajectoryRecord | None = None
    pre_scheduler_params: ModelParams | None = field(default=None, repr=False)
    message: str = ""

    @property
    def final(self) -> TrajectoryRecord:
        return self.trajectory[-1]


# -- losses and regularizers ------------------------------------------------


def _check_dims(op: OpTable, split: DataSplit, n: int | None = None):
    if split.n != op.n or (n is not None and n != op.n):
        raise ValueError(f"dimension mismatch: table n={op.n}, split n={split.n}, model n={n}")


def masked_sq_loss(T, op: OpTable, split: DataSplit, which: str = "train") -> float:
    """Total squared error over the cells of one side of the split.

    ``T`` may be a model tensor or a :class:`ModelParams`.  Each observed
    cell contributes all ``n`` output entries.
    """
    if isinstance(T, ModelParams):
        T = eval_full(T)
    _check_dims(op, split, T.shape[0])
    mask = split.mask(which)
    R = T - op.data_tensor()
    return float(np.sum(R[mask] ** 2))


def h_reg(params: ModelParams) -> float:
    """The HyperCube regularizer, one trace of Gram products per internal edge."""
    g = gram_sums(params)
    total = np.sum(g.A_right * g.B_left) + np.sum(g.B_right * g.C_left) + np.sum(g.C_right * g.A_left)
    return float(total / params.n)


def l2_reg(params: ModelParams) -> float:
    return float(np.sum(params.A**2) + np.sum(params.B**2) + np.sum(params.C**2))


def regularizer(params: ModelParams, reg_kind: str) -> float:
    if reg_kind == "hypercube":
        return h_reg(params)
    if reg_kind == "l2":
        return l2_reg(params)
    return 0.0


def total_loss(params: ModelParams, op: OpTable, split: DataSplit, reg_kind: str, eps: float) -> float:
    return masked_sq_loss(params, op, split, "train") + eps * regularizer(params, reg_kind)


# -- gradients ----------------------------------------------------------------


def _data_gradients(params: ModelParams, G: np.ndarray):
    """Back-propagate ``G = dL/dT`` to the three cubes, O(n^5)."""
    A, B, C = params.A, params.B, params.C
    n = params.n
    P = pair_products(params)  # [a, b, k, j]
    # Q[a, b, j, k] = sum_c G[a,b,c] C[c,j,k]
    Q = (G.reshape(n * n, n) @ C.reshape(n, n * n)).reshape(n, n, n, n)
    # dA[a,k,i] = sum_{b,j} Q[a,b,j,k] B[b,i,j]
    gA = Q.transpose(0, 3, 1, 2).reshape(n, n, n * n) @ B.transpose(0, 2, 1).reshape(n * n, n)
    # dB[b,i,j] = sum_{a,k} A[a,k,i] Q[a,b,j,k]
    gB = (Q.transpose(1, 2, 0, 3).reshape(n * n, n * n) @ A.reshape(n * n, n)).reshape(n, n, n).transpose(0, 2, 1)
    # dC[c,j,k] = sum_{a,b} G[a,b,c] P[a,b,k,j]
    gC = (G.reshape(n * n, n).T @ P.reshape(n * n, n * n)).reshape(n, n, n).transpose(0, 2, 1)
    return gA / n, gB / n, gC / n


def _hypercube_gradients(params: ModelParams):
    A, B, C = params.A, params.B, params.C
    n = params.n
    g = gram_sums(params)
    gA = A @ g.B_left + g.C_right @ A
    gB = B @ g.C_left + g.A_right @ B
    gC = C @ g.A_left + g.B_right @ C
    return 2 * gA / n, 2 * gB / n, 2 * gC / n


def full_gradients(params: ModelParams, op: OpTable, split: DataSplit, reg_kind: str, eps: float,
                   T: np.ndarray | None = None):
    """Gradients of the total loss with respect to ``A``, ``B``, ``C`` treated as independent."""
    if T is None:
        T = eval_full(params)
    _check_dims(op, split, params.n)
    G = 2.0 * (T - op.data_tensor()) * split.train_mask[:, :, None]
    gA, gB, gC = _data_gradients(params, G)
    if eps and reg_kind == "hypercube":
        rA, rB, rC = _hypercube_gradients(params)
        gA, gB, gC = gA + eps * rA, gB + eps * rB, gC + eps * rC
    elif eps and reg_kind == "l2":
        gA, gB, gC = gA + 2 * eps * params.A, gB + 2 * eps * params.B, gC + 2 * eps * params.C
    return gA, gB, gC


def gradients(params: ModelParams, op: OpTable, split: DataSplit, reg_kind: str, eps: float,
              T: np.ndarray | None = None) -> tuple[np.ndarray, ...]:
    """Gradients with respect to the free cubes (see :meth:`ModelParams.free`).

    For a tied model the shared cube receives ``dA + dB + dC^T``.
    """
    gA, gB, gC = full_gradients(params, op, split, reg_kind, eps, T)
    if params.tied:
        return (gA + gB + gC.transpose(0, 2, 1),)
    return gA, gB, gC


# -- optimizer ----------------------------------------------------------------


def gd_step(params: ModelParams, state: OptimState, grads, config: TrainConfig):
    """Heavy-ball update ``v <- mu v + g``, ``theta <- theta - lr v``."""
    free = params.free()
    if len(grads) != len(free) or any(g.shape != x.shape for g, x in zip(grads, free)):
        raise ValueError("gradient shapes do not match the free parameters")
    if not all(np.all(np.isfinite(g)) for g in grads):
        raise TrainingDiverged(f"non-finite gradient at step {state.step}")
    velocity = tuple(config.momentum * v + g for v, g in zip(state.velocity, grads))
    new_free = tuple(x - config.lr * v for x, v in zip(free, velocity))
    new_state = OptimState(velocity=velocity, step=state.step + 1, scheduler_fired=state.scheduler_fired)
    return params.with_free(new_free), new_state


def snapshot(params: ModelParams, op: OpTable, split: DataSplit, step: int, eps: float,
             T: np.ndarray | None = None) -> TrajectoryRecord:
    if T is None:
        T = eval_full(params)
    D = op.data_tensor()
    R2 = np.sum((T - D) ** 2, axis=2)
    u = diagnostics.unitarity(params)
    return TrajectoryRecord(
        step=step,
        train_loss=float(np.sum(R2[split.train_mask])),
        test_loss=float(np.sum(R2[split.test_mask])),
        train_acc=diagnostics.accuracy_from_tensor(T, op, split.train_mask),
        test_acc=diagnostics.accuracy_from_tensor(T, op, split.test_mask),
        imbalance_agg=diagnostics.imbalance(params).aggregate,
        c_unitarity_dev=u.c_dev,
        s_unitarity_dev=u.s_dev,
        h_value=h_reg(params),
        frobenius_sq=frobenius_sq(params),
        active_eps=float(eps),
    )


def train(op: OpTable, split: DataSplit, config: TrainConfig, params: ModelParams | None = None) -> TrainResult:
    """Full-batch momentum gradient descent with the epsilon-scheduler.

    With ``reg_kind="hypercube"`` the regularization coefficient is set to
    zero (once) when the aggregate imbalance, checked at logging steps,
    drops below ``scheduler_threshold``.  The run stops early when the
    train loss falls below ``stop_loss`` with no regularization active.
    """
    _check_dims(op, split)
    if params is None:
        params = init_factors(op.n, config.seed, tied=config.tied)
    state = OptimState.zeros_like(params)
    eps = config.eps if config.reg_kind != "none" else 0.0
    trajectory: list[TrajectoryRecord] = []
    result = TrainResult(params=params, trajectory=trajectory, status="max_steps", steps=0)
    D = op.data_tensor()
    mask = split.train_mask

    for step in range(config.max_steps + 1):
        T = eval_full(params)
        R = T - D
        train_loss = float(np.sum(R[mask] ** 2))
        if not math.isfinite(train_loss) or train_loss > config.diverge_loss:
            result.status = "diverged"
            result.message = f"train loss {train_loss!r} at step {step}"
            log.warning("run diverged: %s", result.message)
            break

        if step % config.log_every == 0 or step == config.max_steps:
            rec = snapshot(params, op, split, step, eps, T)
            trajectory.append(rec)
            if config.reg_kind == "hypercube" and not state.scheduler_fired and eps > 0:
                fire = rec.imbalance_agg < config.scheduler_threshold
                if params.tied and not fire:
                    gnorm = np.sqrt(sum(np.sum(g**2) for g in gradients(params, op, split, "hypercube", eps, T)))
                    fire = gnorm < config.tied_grad_threshold
            else:
                fire = False
            if fire:
                state.scheduler_fired = True
                result.fired_step = step
                result.fired_record = rec
                result.pre_scheduler_params = params
                eps = 0.0
                log.info("scheduler fired at step %d (imbalance %.3g)", step, rec.imbalance_agg)

        if eps == 0.0 and train_loss < config.stop_loss:
            result.status = "converged"
            break
        if step == config.max_steps:
            break

        grads = gradients(params, op, split, config.reg_kind, eps, T)
        try:
            params, state = gd_step(params, state, grads, config)
        except TrainingDiverged as exc:
            result.status = "diverged"
            result.message = str(exc)
            break

    result.params = params
    result.steps = state.step
    if trajectory and trajectory[-1].step != state.step and result.status != "diverged":
        trajectory.append(snapshot(params, op, split, state.step, eps))
    return result
