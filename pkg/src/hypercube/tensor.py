"""HyperCube factor cubes and the trace-product contraction.

The model tensor is ``T[a, b, c] = (1/n) Tr[A_a B_b C_c]`` with slices
``A_a[k, i] = A[a, k, i]``, ``B_b[i, j] = B[b, i, j]`` and
``C_c[j, k] = C[c, j, k]``, i.e.

    T[a, b, c] = (1/n) sum_{ijk} A[a,k,i] B[b,i,j] C[c,j,k].

All arrays are real float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Identifies the slice/axis convention above in factor files.
LAYOUT_TAG = "A[a,k,i]B[b,i,j]C[c,j,k]"


@dataclass(frozen=True)
class ModelParams:
    """Three ``n x n x n`` factor cubes.

    With ``tied=True`` (shared embedding) only ``A`` is free and
    ``B_s = A_s``, ``C_s = A_s^T``; use :meth:`from_shared` to build one.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    tied: bool = False

    def __post_init__(self):
        shapes = {self.A.shape, self.B.shape, self.C.shape}
        if len(shapes) != 1:
            raise ValueError(f"factor shapes differ: {self.A.shape}, {self.B.shape}, {self.C.shape}")
        (shape,) = shapes
        if len(shape) != 3 or len(set(shape)) != 1:
            raise ValueError(f"factors must be n x n x n cubes, got {shape}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @classmethod
    def from_shared(cls, W: np.ndarray) -> "ModelParams":
        W = np.asarray(W, dtype=float)
        return cls(W, W.copy(), np.ascontiguousarray(W.transpose(0, 2, 1)), tied=True)

    def free(self) -> tuple[np.ndarray, ...]:
        """The independently trainable cubes."""
        return (self.A,) if self.tied else (self.A, self.B, self.C)

    def with_free(self, free) -> "ModelParams":
        if self.tied:
            (W,) = free
            return ModelParams.from_shared(W)
        return ModelParams(*free, tied=False)

    def scaled(self, s: float) -> "ModelParams":
        """Every factor multiplied by ``s``."""
        if self.tied:
            return ModelParams.from_shared(s * self.A)
        return ModelParams(s * self.A, s * self.B, s * self.C)

    def untied(self) -> "ModelParams":
        return ModelParams(self.A.copy(), self.B.copy(), self.C.copy(), tied=False)


def init_factors(n: int, seed: int, std: float | None = None, tied: bool = False) -> ModelParams:
    """I.i.d. ``Normal(0, std^2)`` entries, ``std = 1/sqrt(n)`` by default."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if std is None:
        std = 1.0 / np.sqrt(n)
    if std <= 0:
        raise ValueError(f"std must be positive, got {std}")
    rng = np.random.default_rng(seed)
    if tied:
        return ModelParams.from_shared(rng.normal(0.0, std, size=(n, n, n)))
    A, B, C = (rng.normal(0.0, std, size=(n, n, n)) for _ in range(3))
    return ModelParams(A, B, C)


def _check_index(n, *idx):
    for x in idx:
        if not (0 <= x < n):
            raise IndexError(f"symbol index {x} out of range [0, {n})")


def eval_cell(params: ModelParams, a: int, b: int) -> np.ndarray:
    """Scores ``T[a, b, :]`` for a single input pair."""
    n = params.n
    _check_index(n, a, b)
    P = params.A[a] @ params.B[b]  # (k, j)
    # Tr[P C_c] = sum_{kj} P[k,j] C[c,j,k]
    return np.einsum("kj,cjk->c", P, params.C) / n


def pair_products(params: ModelParams) -> np.ndarray:
    """``P[a, b] = A_a B_b`` for all pairs, shape ``(n, n, n, n)`` indexed ``[a, b, k, j]``."""
    return np.matmul(params.A[:, None], params.B[None, :])


def eval_full(params: ModelParams) -> np.ndarray:
    """The full model tensor ``T``, O(n^5)."""
    n = params.n
    P = pair_products(params).reshape(n * n, n * n)
    Ct = params.C.transpose(2, 1, 0).reshape(n * n, n)  # [(k, j), c]
    return (P @ Ct).reshape(n, n, n) / n


def eval_naive(params: ModelParams) -> np.ndarray:
    """Six-index loop reference for ``eval_full``; only for tiny ``n``."""
    n = params.n
    A, B, C = params.A, params.B, params.C
    T = np.zeros((n, n, n))
    for a in range(n):
        for b in range(n):
            for c in range(n):
                s = 0.0
                for i in range(n):
                    for j in range(n):
                        for k in range(n):
                            s += A[a, k, i] * B[b, i, j] * C[c, j, k]
                T[a, b, c] = s / n
    return T


def frobenius_sq(params: ModelParams) -> float:
    """``(1/n)`` times the summed squared entries of ``A``, ``B`` and ``C``."""
    return float((np.sum(params.A**2) + np.sum(params.B**2) + np.sum(params.C**2)) / params.n)


def regular_representation(table: np.ndarray) -> np.ndarray:
    """Left-regular permutation matrices ``rho[g][g o h, h] = 1``.

    For a group table, ``rho[g1] @ rho[g2] == rho[g1 o g2]``.
    """
    table = np.asarray(table)
    n = table.shape[0]
    rho = np.zeros((n, n, n))
    g, h = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    rho[g, table[g, h], h] = 1.0
    return rho


def representation_factors(rho: np.ndarray, transposed: bool = False, tied: bool = False) -> ModelParams:
    """Factors built from a representation.

    Default layout is ``A_g = B_g = C_g^T = rho(g)``, which reproduces a
    group table exactly.  ``transposed=True`` gives ``A_g^T = B_g = C_g =
    rho(g)``, which reproduces ``a - b`` when ``rho`` represents ``a + b``.
    """
    rho = np.asarray(rho, dtype=float)
    if tied:
        if transposed:
            raise ValueError("transposed layout cannot be tied")
        return ModelParams.from_shared(rho)
    rhoT = np.ascontiguousarray(rho.transpose(0, 2, 1))
    if transposed:
        return ModelParams(rhoT, rho.copy(), rho.copy())
    return ModelParams(rho.copy(), rho.copy(), rhoT)


@dataclass(frozen=True)
class GramSums:
    """Slice Gram matrices contracted over the symbol index.

    ``left`` is ``sum_s X_s X_s^T`` and ``right`` is ``sum_s X_s^T X_s``.
    """

    A_left: np.ndarray  # (k, k)
    A_right: np.ndarray  # (i, i)
    B_left: np.ndarray  # (i, i)
    B_right: np.ndarray  # (j, j)
    C_left: np.ndarray  # (j, j)
    C_right: np.ndarray  # (k, k)


def _left(X):
    Y = X.transpose(1, 0, 2).reshape(X.shape[1], -1)
    return Y @ Y.T


def _right(X):
    Y = X.reshape(-1, X.shape[2])
    return Y.T @ Y


def gram_sums(params: ModelParams) -> GramSums:
    A, B, C = params.A, params.B, params.C
    return GramSums(_left(A), _right(A), _left(B), _right(B), _left(C), _right(C))
