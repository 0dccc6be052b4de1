"""Operation tables (Cayley tables), group-axiom checks and train/test splits.

Symbols are the integers ``0..n-1``.  ``table[a, b]`` holds the index of
``a o b``.  The data tensor is ``D[a, b, c] = 1`` iff ``table[a, b] == c``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

MODULAR_KINDS = ("add", "sub", "div", "mix", "quad1", "quad2", "quad3", "cube1", "cube2")
SYMMETRIC_VARIANTS = ("ab", "aba_inv", "aba")

# m! symbols means an (m!)^3 factor cube; 7! = 5040 is already ~1 TB in float64.
MAX_SYMMETRIC_ORDER = 120


@dataclass(frozen=True)
class OpTable:
    """A binary operation over ``n`` symbols.

    ``defined`` marks which cells carry data.  It is all-True except for
    ``div``, whose column ``b = 0`` has no value (division by zero); those
    cells hold a placeholder 0 and are never used for training or testing.
    """

    n: int
    table: np.ndarray
    kind: str
    identity: int | None = None
    defined: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]

    def __post_init__(self):
        table = np.asarray(self.table, dtype=np.int64)
        if table.shape != (self.n, self.n):
            raise ValueError(f"table must be {self.n}x{self.n}, got {table.shape}")
        if table.size and (table.min() < 0 or table.max() >= self.n):
            raise ValueError("table entries must lie in [0, n)")
        defined = self.defined
        if defined is None:
            defined = np.ones((self.n, self.n), dtype=bool)
        defined = np.asarray(defined, dtype=bool)
        if defined.shape != (self.n, self.n):
            raise ValueError("defined mask must match table shape")
        if self.identity is not None:
            e = self.identity
            g = np.arange(self.n)
            if not (0 <= e < self.n) or not (np.all(table[e] == g) and np.all(table[:, e] == g)):
                raise ValueError(f"element {e} is not an identity of this table")
        table.setflags(write=False)
        defined.setflags(write=False)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "defined", defined)

    def data_tensor(self) -> np.ndarray:
        """One-hot tensor ``D[a, b, c]`` (undefined cells are all zero)."""
        D = np.zeros((self.n, self.n, self.n))
        a, b = np.nonzero(self.defined)
        D[a, b, self.table[a, b]] = 1.0
        return D

    @property
    def n_defined(self) -> int:
        return int(self.defined.sum())

    def __eq__(self, other):
        if not isinstance(other, OpTable):
            return NotImplemented
        return (
            self.n == other.n
            and self.kind == other.kind
            and self.identity == other.identity
            and np.array_equal(self.table, other.table)
            and np.array_equal(self.defined, other.defined)
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class AxiomReport:
    closure: bool
    associative: bool
    has_identity: bool
    identity: int | None
    has_inverses: bool

    @property
    def is_group(self) -> bool:
        return self.closure and self.associative and self.has_identity and self.has_inverses


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % d for d in range(2, math.isqrt(p) + 1))


def _mod_div(a, b, p):
    # a * b^(p-2) mod p; b^(p-2) is the inverse of b for prime p
    return (a * pow(int(b), p - 2, p)) % p


def make_modular(kind: str, p: int) -> OpTable:
    """Build one of the modular-arithmetic tables over ``Z_p``.

    ``div`` and ``mix`` need ``p`` prime.  For ``div`` the column ``b = 0``
    is marked undefined.
    """
    if kind not in MODULAR_KINDS:
        raise ValueError(f"unknown modular kind {kind!r}; expected one of {MODULAR_KINDS}")
    if p < 2:
        raise ValueError(f"modulus must be >= 2, got {p}")
    if kind in ("div", "mix") and not is_prime(p):
        raise ValueError(f"{kind} needs a prime modulus (modular inverse undefined for p={p})")

    defined = np.ones((p, p), dtype=bool)
    table = np.zeros((p, p), dtype=np.int64)
    for a in range(p):
        for b in range(p):
            if kind == "add":
                c = a + b
            elif kind == "sub":
                c = a - b
            elif kind == "div":
                if b == 0:
                    defined[a, b] = False
                    continue
                c = _mod_div(a, b, p)
            elif kind == "mix":
                c = _mod_div(a, b, p) if b % 2 == 1 else a - b
            elif kind == "quad1":
                c = a * a + b * b
            elif kind == "quad2":
                c = a * a + a * b + b * b
            elif kind == "quad3":
                c = a * a + a * b + b * b + a
            elif kind == "cube1":
                c = a**3 + a * b
            else:  # cube2
                c = a**3 + a * b * b + b
            table[a, b] = c % p
    identity = 0 if kind == "add" else None
    return OpTable(n=p, table=table, kind=kind, identity=identity, defined=defined)


def permutations(m: int) -> list[tuple[int, ...]]:
    """All permutations of ``range(m)`` in lexicographic one-line order."""
    return list(itertools.permutations(range(m)))


def compose(g, h):
    """``(g o h)(x) = g(h(x))``."""
    return tuple(g[x] for x in h)


def invert(g):
    inv = [0] * len(g)
    for i, gi in enumerate(g):
        inv[gi] = i
    return tuple(inv)


def make_symmetric(m: int, variant: str = "ab", max_order: int = MAX_SYMMETRIC_ORDER) -> OpTable:
    """Tables over the symmetric group ``S_m`` (``n = m!``).

    Elements are indexed by lexicographic order of their one-line notation,
    so index 0 is the identity.  Variants: ``ab`` is the group product,
    ``aba_inv`` is conjugation ``a b a^-1`` and ``aba`` is ``a b a``.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if variant not in SYMMETRIC_VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {SYMMETRIC_VARIANTS}")
    n = math.factorial(m)
    if n > max_order:
        raise ValueError(
            f"S_{m} has {n} elements, above the size cap of {max_order} "
            f"(factor cubes would need {3 * n**3 * 8 / 1e9:.1f} GB); raise max_order to override"
        )
    perms = permutations(m)
    index = {g: i for i, g in enumerate(perms)}
    table = np.empty((n, n), dtype=np.int64)
    for i, a in enumerate(perms):
        a_inv = invert(a)
        for j, b in enumerate(perms):
            ab = compose(a, b)
            if variant == "ab":
                r = ab
            elif variant == "aba_inv":
                r = compose(ab, a_inv)
            else:
                r = compose(ab, a)
            table[i, j] = index[r]
    identity = 0 if variant == "ab" else None
    return OpTable(n=n, table=table, kind=f"S{m}_{variant}", identity=identity)


def check_axioms(op: OpTable) -> AxiomReport:
    """Exhaustively test closure, associativity, identity and inverses."""
    t = op.table
    n = op.n
    closure = bool(op.defined.all()) and bool(np.all((t >= 0) & (t < n)))
    # (a o b) o c  vs  a o (b o c), all n^3 triples at once
    if closure:
        left = t[t[:, :, None], np.arange(n)[None, None, :]]
        right = t[np.arange(n)[:, None, None], t[None, :, :]]
        associative = bool(np.array_equal(left, right))
    else:
        associative = False

    identity = None
    g = np.arange(n)
    for e in range(n):
        if np.all(t[e] == g) and np.all(t[:, e] == g) and op.defined[e].all() and op.defined[:, e].all():
            identity = e
            break

    has_inverses = False
    if identity is not None:
        is_e = (t == identity) & op.defined
        # g has a two-sided inverse h iff t[g,h] == e and t[h,g] == e
        has_inverses = bool(np.all(np.any(is_e & is_e.T, axis=1)))
    return AxiomReport(
        closure=closure,
        associative=associative,
        has_identity=identity is not None,
        identity=identity,
        has_inverses=has_inverses,
    )


@dataclass(frozen=True)
class DataSplit:
    """Train/test partition of the defined cells of an ``n x n`` table."""

    n: int
    train_mask: np.ndarray
    test_mask: np.ndarray
    fraction: float
    seed: int

    def __post_init__(self):
        for m in (self.train_mask, self.test_mask):
            m.setflags(write=False)

    @property
    def train_cells(self) -> set[tuple[int, int]]:
        return {(int(a), int(b)) for a, b in zip(*np.nonzero(self.train_mask))}

    @property
    def test_cells(self) -> set[tuple[int, int]]:
        return {(int(a), int(b)) for a, b in zip(*np.nonzero(self.test_mask))}

    def mask(self, which: str) -> np.ndarray:
        if which == "train":
            return self.train_mask
        if which == "test":
            return self.test_mask
        raise ValueError(f"which must be 'train' or 'test', got {which!r}")


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def split_cells(op: OpTable, fraction: float, seed: int) -> DataSplit:
    """Sample ``round(fraction * #cells)`` training cells without replacement.

    Fully determined by ``(table, fraction, seed)``.
    """
    if not (0.0 < fraction <= 1.0):
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    cells = np.flatnonzero(op.defined.ravel())
    k = round_half_up(fraction * len(cells))
    rng = np.random.default_rng(seed)
    chosen = rng.permutation(len(cells))[:k]
    train = np.zeros(op.n * op.n, dtype=bool)
    train[cells[chosen]] = True
    train = train.reshape(op.n, op.n)
    test = op.defined & ~train
    return DataSplit(n=op.n, train_mask=train, test_mask=test, fraction=float(fraction), seed=int(seed))


def full_split(op: OpTable) -> DataSplit:
    return split_cells(op, 1.0, 0)
