"""Reading group representations out of trained factors.

After an orthogonal change of the internal basis that turns the identity
slices into identity matrices, a model trained on a group table satisfies
``A_g = B_g = C_g^T = rho(g)`` for a representation ``rho``.  This module
performs that change and measures how closely the slices obey the
homomorphism, character and shared-embedding relations.  It also provides
the group Fourier transform and group convolution that the model computes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import polar
from scipy.stats import ortho_group

from .optable import OpTable, check_axioms
from .tensor import ModelParams


@dataclass(frozen=True)
class BasisChange:
    """Invertible maps inserted on the three internal edges.

    The new factors are ``A~_a = M_K^-1 A_a M_I``, ``B~_b = M_I^-1 B_b M_J``
    and ``C~_c = M_J^-1 C_c M_K``, which leaves ``T`` unchanged.
    """

    M_I: np.ndarray
    M_J: np.ndarray
    M_K: np.ndarray
    orthogonal: bool = False

    @property
    def inverses(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self.orthogonal:
            return self.M_I.T, self.M_J.T, self.M_K.T
        return np.linalg.inv(self.M_I), np.linalg.inv(self.M_J), np.linalg.inv(self.M_K)

    def apply(self, params: ModelParams) -> ModelParams:
        iI, iJ, iK = self.inverses
        A = iK @ params.A @ self.M_I
        B = iI @ params.B @ self.M_J
        C = iJ @ params.C @ self.M_K
        return ModelParams(A, B, C)

    @classmethod
    def random_orthogonal(cls, n: int, seed: int) -> "BasisChange":
        rng = np.random.default_rng(seed)
        if n == 1:
            U = [np.array([[rng.choice([-1.0, 1.0])]]) for _ in range(3)]
        else:
            U = [ortho_group.rvs(n, random_state=rng) for _ in range(3)]
        return cls(*U, orthogonal=True)

    @classmethod
    def random_general(cls, n: int, seed: int, min_condition: float = 2.0) -> "BasisChange":
        """Random invertible matrices whose condition numbers are at least ``min_condition``."""
        rng = np.random.default_rng(seed)
        Ms = []
        for _ in range(3):
            U = ortho_group.rvs(n, random_state=rng) if n > 1 else np.eye(1)
            V = ortho_group.rvs(n, random_state=rng) if n > 1 else np.eye(1)
            s = np.exp(rng.uniform(-1.0, 1.0, size=n))
            s[0], s[-1] = np.sqrt(min_condition) * 1.5, 1.0 / (np.sqrt(min_condition) * 1.5)
            Ms.append(U @ np.diag(s) @ V)
        return cls(*Ms, orthogonal=False)


@dataclass(frozen=True)
class RepReport:
    hom_err: float
    char_err: float
    share_err: float
    transpose_share_err: float


def orthogonality_deviation(X: np.ndarray) -> float:
    """Scale-free distance of a square matrix from a multiple of an orthogonal one.

    ``||X X^T / alpha^2 - I||_F`` with ``alpha^2 = Tr[X X^T]/n``.
    """
    n = X.shape[0]
    G = X @ X.T
    a2 = np.trace(G) / n
    if a2 == 0:
        return float("inf")
    return float(np.linalg.norm(G / a2 - np.eye(n)))


def identity_basis_change(params: ModelParams, e: int | None, max_deviation: float = 1e-2,
                          normalize_scale: bool = True):
    """Basis change making the slices at ``e`` (nearly) identity matrices.

    Uses ``M_I = I``, ``M_K = U_A`` and ``M_J = U_B^T`` where ``U_A``, ``U_B``
    are the orthogonal polar factors of ``A_e`` and ``B_e``.  ``e`` is
    normally the table's identity; for tables without one an anchor element
    whose slices behave like the identity (``0`` for subtraction) can be
    passed explicitly.

    A fit that reproduces ``D`` is only pinned down up to per-factor scales
    ``(x A, y B, C / (x y))``.  With ``normalize_scale`` the maps become
    ``M_K = a U_A`` and ``M_J = U_B^T / b``, where ``a`` and ``b`` are the
    scales of ``A_e`` and ``B_e``, so the aligned identity slices have
    unit scale.  ``T`` is unchanged either way.

    Returns ``(aligned_params, BasisChange)``.
    """
    if e is None:
        raise ValueError("no identity element: pass an explicit anchor element")
    n = params.n
    if not (0 <= e < n):
        raise IndexError(f"element {e} out of range [0, {n})")
    for name, X in (("A", params.A[e]), ("B", params.B[e])):
        dev = orthogonality_deviation(X)
        if dev > max_deviation:
            raise ValueError(
                f"slice {name}_{e} is not close to orthogonal (deviation {dev:.3g} > {max_deviation:g})"
            )
    U_A, P_A = polar(params.A[e])
    U_B, P_B = polar(params.B[e])
    if normalize_scale:
        a, b = np.trace(P_A) / n, np.trace(P_B) / n
        change = BasisChange(M_I=np.eye(n), M_J=U_B.T / b, M_K=a * U_A, orthogonal=False)
    else:
        change = BasisChange(M_I=np.eye(n), M_J=U_B.T, M_K=U_A, orthogonal=True)
    return change.apply(params), change


def homomorphism_error(slices: np.ndarray, table: np.ndarray) -> float:
    """``max_{g1,g2} ||X_g1 X_g2 - X_{table[g1,g2]}||_F``."""
    prod = np.matmul(slices[:, None], slices[None, :])
    return float(np.max(np.linalg.norm(prod - slices[table], axis=(2, 3))))


def character_error(slices: np.ndarray, e: int) -> float:
    """``max_g |Tr X_g - n [g = e]|``: distance from the regular character."""
    n = slices.shape[0]
    target = np.zeros(n)
    target[e] = slices.shape[1]
    return float(np.max(np.abs(np.trace(slices, axis1=1, axis2=2) - target)))


def _T(X):
    return X.transpose(0, 2, 1)


def rep_checks(aligned: ModelParams, op: OpTable, e: int | None = None) -> RepReport:
    """Homomorphism, character and embedding-sharing residuals of aligned factors.

    ``share_err`` tests ``A_g = B_g = C_g^T`` (group layout) and
    ``transpose_share_err`` tests ``A_g^T = B_g = C_g`` (the layout learned
    for subtraction).  ``char_err`` needs an identity; it is NaN when the
    table has none and no ``e`` is given.
    """
    A, B, C = aligned.A, aligned.B, aligned.C
    if e is None:
        e = op.identity
    hom = homomorphism_error(A, op.table)
    char = character_error(A, e) if e is not None else float("nan")
    norm = lambda X: np.linalg.norm(X, axis=(1, 2))  # noqa: E731
    share = float(np.max(np.maximum(norm(A - B), norm(A - _T(C)))))
    tshare = float(np.max(np.maximum(norm(_T(A) - B), norm(B - C))))
    return RepReport(hom_err=hom, char_err=char, share_err=share, transpose_share_err=tshare)


def reconstruct_table(slices: np.ndarray) -> np.ndarray:
    """Decode ``g1 o g2`` as the slice nearest to ``X_g1 X_g2``."""
    n = slices.shape[0]
    prod = np.matmul(slices[:, None], slices[None, :]).reshape(n * n, -1)
    flat = slices.reshape(n, -1)
    d2 = (prod**2).sum(1)[:, None] - 2 * prod @ flat.T + (flat**2).sum(1)[None, :]
    return np.argmin(d2, axis=1).reshape(n, n)


def slice_distance(X: np.ndarray, g: int, h: int) -> float:
    """``||X_g - X_h||_F``; unchanged by orthogonal basis changes."""
    return float(np.linalg.norm(X[g] - X[h]))


def fourier(f: np.ndarray, factor: np.ndarray) -> np.ndarray:
    """``f_hat = sum_g f[g] X_g``."""
    f = np.asarray(f, dtype=float)
    if f.shape != (factor.shape[0],):
        raise ValueError(f"f must have length {factor.shape[0]}, got shape {f.shape}")
    return np.tensordot(f, factor, axes=1)


def inverse_fourier(fhat: np.ndarray, factor_c: np.ndarray) -> np.ndarray:
    """``f[g] = (1/n) Tr[f_hat C_g]``."""
    n = factor_c.shape[0]
    if fhat.shape != factor_c.shape[1:][::-1]:
        raise ValueError(f"fhat must be {factor_c.shape[2]}x{factor_c.shape[1]}, got {fhat.shape}")
    return np.einsum("kj,gjk->g", fhat, factor_c) / n


def convolve_table(f: np.ndarray, h: np.ndarray, op: OpTable) -> np.ndarray:
    """``out[c] = sum over (a, b) with a o b = c of f[a] h[b]``.

    On a group this is the group convolution.  The sum is still defined on
    other tables, which only triggers a warning.
    """
    f = np.asarray(f, dtype=float)
    h = np.asarray(h, dtype=float)
    if f.shape != (op.n,) or h.shape != (op.n,):
        raise ValueError(f"f and h must have length {op.n}")
    if not check_axioms(op).is_group:
        warnings.warn(f"{op.kind} is not a group; computing the table contraction anyway", stacklevel=2)
    w = np.outer(f, h)[op.defined]
    return np.bincount(op.table[op.defined], weights=w, minlength=op.n)


def bilinear_apply(params: ModelParams, f: np.ndarray, h: np.ndarray) -> np.ndarray:
    """``sum_{a,b} f[a] h[b] T[a, b, :]`` via two Fourier maps, O(n^3)."""
    fh = fourier(f, params.A) @ fourier(h, params.B)
    return inverse_fourier(fh, params.C)
