"""Structural probes of trained factors: imbalance, unitarity, accuracy, spectra."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .optable import DataSplit, OpTable
from .tensor import ModelParams, eval_full, gram_sums

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ImbalanceReport:
    xi_i: float
    xi_j: float
    xi_k: float

    @property
    def aggregate(self) -> float:
        return float(np.sqrt(self.xi_i + self.xi_j + self.xi_k))


@dataclass(frozen=True)
class UnitarityReport:
    c_dev: float
    s_dev: float
    alpha_sq: float
    alpha_slices: np.ndarray  # (3, n): per-factor, per-slice alpha_s^2


def _sandwich_t(X, M):
    """``sum_s X_s^T M X_s``."""
    return X.reshape(-1, X.shape[2]).T @ (M @ X).reshape(-1, X.shape[2])


def _sandwich(X, M):
    """``sum_s X_s M X_s^T``."""
    Y = X @ M
    return Y.transpose(1, 0, 2).reshape(X.shape[1], -1) @ X.transpose(1, 0, 2).reshape(X.shape[1], -1).T


def imbalance_matrices(params: ModelParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three imbalance matrices across the internal edges i, j, k.

    These vanish at every stationary point of the regularized loss.
    """
    A, B, C = params.A, params.B, params.C
    g = gram_sums(params)
    xi_i = _sandwich_t(A, g.C_right) - _sandwich(B, g.C_left)
    xi_j = _sandwich_t(B, g.A_right) - _sandwich(C, g.A_left)
    xi_k = _sandwich_t(C, g.B_right) - _sandwich(A, g.B_left)
    return xi_i, xi_j, xi_k


def imbalance(params: ModelParams) -> ImbalanceReport:
    xi = imbalance_matrices(params)
    return ImbalanceReport(*(float(np.sum(x**2)) for x in xi))


def unitarity(params: ModelParams) -> UnitarityReport:
    """Deviation from contracted (C) and slice (S) unitarity.

    The C deviation averages ``||G/n - alpha^2 I||_F^2`` over the three
    factors and both Gram orders; ``alpha^2`` is one common scale,
    ``Tr[G]/n^2`` averaged over factors.  The S deviation averages
    ``||X_s X_s^T - alpha_s^2 I||_F^2`` over factors and slices with
    ``alpha_s^2 = Tr[X_s X_s^T]/n``.
    """
    n = params.n
    g = gram_sums(params)
    grams = (g.A_left, g.A_right, g.B_left, g.B_right, g.C_left, g.C_right)
    eye = np.eye(n)
    alpha_sq = float(np.mean([np.trace(G) for G in grams]) / n**2)
    c_dev = float(np.mean([np.sum((G / n - alpha_sq * eye) ** 2) for G in grams]))

    slice_devs = []
    alphas = []
    for X in (params.A, params.B, params.C):
        XXt = np.matmul(X, X.transpose(0, 2, 1))
        a_s = np.trace(XXt, axis1=1, axis2=2) / n
        alphas.append(a_s)
        slice_devs.append(np.sum((XXt - a_s[:, None, None] * eye) ** 2, axis=(1, 2)))
    s_dev = float(np.mean(slice_devs))
    return UnitarityReport(c_dev=c_dev, s_dev=s_dev, alpha_sq=alpha_sq, alpha_slices=np.array(alphas))


def predict(T: np.ndarray) -> np.ndarray:
    """Argmax decoding over the output index; ties go to the lowest index."""
    return np.argmax(T, axis=2)


def accuracy_from_tensor(T: np.ndarray, op: OpTable, mask: np.ndarray) -> float:
    if not mask.any():
        return 1.0
    return float(np.mean(predict(T)[mask] == op.table[mask]))


def accuracy(params: ModelParams, op: OpTable, split: DataSplit, which: str = "test") -> float:
    """Fraction of cells in the chosen set whose argmax matches the table.

    An empty set (e.g. the test set at fraction 1.0) counts as 1.0.
    """
    return accuracy_from_tensor(eval_full(params), op, split.mask(which))


def unfold(X: np.ndarray, axis: int = 0) -> np.ndarray:
    """Unfold a cube into an ``(n, n*n)`` matrix with ``axis`` as the row index.

    ``axis=0`` puts the slice (symbol) index on the rows; ``axis=1`` puts
    the first internal index there, i.e. ``[X_0 | X_1 | ...]``.
    """
    return np.moveaxis(X, axis, 0).reshape(X.shape[axis], -1)


def factor_spectra(params: ModelParams, axis: int = 1) -> np.ndarray | None:
    """Singular values of each unfolded factor, divided by the largest.

    The default unfolding (``axis=1``) has rank equal to the number of
    internal dimensions a factor actually uses, so it shows rank collapse
    along the internal edges; ``axis=0`` gives the symbol-index unfolding.
    Returns a ``(3, n)`` array (rows A, B, C, values descending) or
    ``None`` if the SVD fails.
    """
    if axis not in (0, 1, 2):
        raise ValueError(f"axis must be 0, 1 or 2, got {axis}")
    out = []
    for X in (params.A, params.B, params.C):
        try:
            s = np.linalg.svd(unfold(X, axis), compute_uv=False)
        except np.linalg.LinAlgError as exc:
            log.warning("SVD failed: %s", exc)
            return None
        out.append(s / s[0] if s[0] > 0 else s)
    return np.array(out)
