"""Local and global operators for nearest-neighbour interacting particle systems.

Configurations live in {0,1}^n over the sites 0..n-1 of a path.  Site 0 is the
most significant bit of a configuration's index, so for n = 3 the basis vector
of (0,1,0) is e_2 in C^8.  A local operator is a 4x4 table of transition
weights a[(k,l)][(i,j)] sending the adjacent-pair state (i,j) to (k,l); the
right site of a pair is never changed, so every entry with j != l must vanish
and at most 8 entries are nonzero.

The global operator on n sites is the product of local factors swept over the
pairs (0,1), (1,2), ..., (n-2,n-1), where the pair-(0,1) factor acts first on
a state.  For n = 1 the global operator is the 2x2 identity by convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    DenseUnavailable,
    LengthMismatch,
    ParamOutOfRange,
    SizeCapExceeded,
    SparsityViolation,
)

# Size caps.  Dense matrices are only built up to 2**14; sweep-based
# (matrix-free) application works on vectors up to 2**26 entries.
DENSE_SITE_CAP = 14
MATRIX_FREE_SITE_CAP = 26

# Entry (row, col) of the 4x4 table is allowed iff the right bits agree,
# i.e. row % 2 == col % 2 with the pair ordering (0,0),(0,1),(1,0),(1,1).
_ALLOWED_MASK = np.array(
    [[(r % 2) == (c % 2) for c in range(4)] for r in range(4)], dtype=bool
)


class OperatorKind(Enum):
    CA = "ca"
    PCA = "pca"
    QCA = "qca"
    GENERAL = "general"


@dataclass(frozen=True)
class OperatorClass:
    """Result of classifying a local operator at a given tolerance."""

    kind: OperatorKind
    tol: float


@dataclass(frozen=True, eq=False)
class LocalOperator:
    """Validated 4x4 transition-weight table; immutable after construction."""

    matrix: np.ndarray
    label: str | None = None

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape == (16,):
            m = m.reshape(4, 4)
        if m.shape != (4, 4):
            raise ValueError("local operator needs a 4x4 (or flat 16) table, got %r" % (m.shape,))
        for r, c in np.argwhere(~_ALLOWED_MASK):
            if m[r, c] != 0:
                raise SparsityViolation(r // 2, r % 2, c // 2, c % 2, m[r, c])
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def entry(self, k: int, l: int, i: int, j: int) -> complex:
        """Weight a[(k,l)][(i,j)] of the transition (i,j) -> (k,l)."""
        return complex(self.matrix[2 * k + l, 2 * i + j])

    def column_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=0)

    def self_transition_table(self) -> np.ndarray:
        """2x2 table T[i,j] = a[(i,j)][(i,j)] of pairs mapped to themselves."""
        return self.matrix.diagonal().reshape(2, 2).copy()


def make_local_operator(entries, label: str | None = None) -> LocalOperator:
    """Build a local operator from a 4x4 (or flat, row-major 16) entry table.

    Rows index the target pair (k,l), columns the source pair (i,j), both in
    the order (0,0),(0,1),(1,0),(1,1).  Raises SparsityViolation if any entry
    that would change the right site is nonzero.
    """
    return LocalOperator(np.asarray(entries, dtype=complex), label)


def identity_local() -> LocalOperator:
    return make_local_operator(np.eye(4), label="identity")


def qca_rotation_local(xi: float) -> LocalOperator:
    """Rotation-type unitary local operator with angle xi.

    Both column blocks hold the same planar rotation, so the operator is
    unitary for every xi and reduces to the identity at xi = 0.
    """
    c, s = np.cos(xi), np.sin(xi)
    m = np.array(
        [
            [c, 0.0, -s, 0.0],
            [0.0, c, 0.0, -s],
            [s, 0.0, c, 0.0],
            [0.0, s, 0.0, c],
        ]
    )
    return make_local_operator(m, label="qca-rotation(%g)" % xi)


def classify(local: LocalOperator, tol: float = 1e-10) -> OperatorClass:
    """Classify a local operator as CA, PCA, QCA or GENERAL.

    CA: all allowed entries in {0,1}.  PCA: real entries in [0,1] with every
    column summing to 1 (transposed-stochastic).  QCA: the 4x4 table is
    unitary.  Checks run in that order, so a deterministic rule that is also
    stochastic (or unitary) still reports CA.
    """
    m = local.matrix
    vals = m[_ALLOWED_MASK]
    if np.all(np.minimum(np.abs(vals), np.abs(vals - 1)) <= tol):
        return OperatorClass(OperatorKind.CA, tol)
    re, im = vals.real, vals.imag
    if (
        np.all(np.abs(im) <= tol)
        and np.all(re >= -tol)
        and np.all(re <= 1 + tol)
        and np.all(np.abs(local.column_sums() - 1) <= tol)
    ):
        return OperatorClass(OperatorKind.PCA, tol)
    if np.max(np.abs(m.conj().T @ m - np.eye(4))) <= tol:
        return OperatorClass(OperatorKind.QCA, tol)
    return OperatorClass(OperatorKind.GENERAL, tol)


# --- configurations ---------------------------------------------------------


def config_index(bits) -> int:
    """Index of a bit tuple, site 0 most significant."""
    idx = 0
    for b in bits:
        if b not in (0, 1):
            raise ValueError("bits must be 0 or 1, got %r" % (b,))
        idx = (idx << 1) | b
    return idx


def config_bits(index: int, n_sites: int) -> tuple:
    if not 0 <= index < (1 << n_sites):
        raise ValueError("index %d out of range for %d sites" % (index, n_sites))
    return tuple((index >> (n_sites - 1 - x)) & 1 for x in range(n_sites))


@dataclass(frozen=True)
class Configuration:
    """A classical configuration together with its basis index."""

    n_sites: int
    bits: tuple
    index: int

    def __post_init__(self):
        if self.n_sites < 1 or len(self.bits) != self.n_sites:
            raise ParamOutOfRange("inconsistent configuration")
        if config_index(self.bits) != self.index:
            raise ParamOutOfRange(
                "bits %r do not match index %d" % (self.bits, self.index))

    @classmethod
    def from_bits(cls, bits) -> "Configuration":
        bits = tuple(int(b) for b in bits)
        return cls(len(bits), bits, config_index(bits))

    @classmethod
    def from_index(cls, index: int, n_sites: int) -> "Configuration":
        return cls(n_sites, config_bits(index, n_sites), index)


# --- global operators -------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GlobalOperator:
    """Global operator on n sites; dense storage is optional."""

    n_sites: int
    local: LocalOperator
    dense: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return 1 << self.n_sites

    def blocks(self):
        """Quadrant views (E, F, G, H) of the dense matrix, each dim/2 square."""
        if self.dense is None:
            raise DenseUnavailable("operator was built without a dense matrix")
        h = self.dim // 2
        d = self.dense
        return d[:h, :h], d[:h, h:], d[h:, :h], d[h:, h:]


def block_views(g: GlobalOperator):
    return g.blocks()


def _check_sites(n: int, cap: int):
    if n < 1:
        raise ParamOutOfRange("need at least one site, got n=%d" % n)
    if n > cap:
        raise SizeCapExceeded("n=%d exceeds cap %d" % (n, cap))


def build_global_kronecker(local: LocalOperator, n_sites: int,
                           cap: int = DENSE_SITE_CAP) -> GlobalOperator:
    """Dense global operator as an explicit product of Kronecker factors.

    Factor j acts on the pair (j, j+1); the j = 0 factor is applied first.
    """
    _check_sites(n_sites, cap)
    if n_sites == 1:
        return GlobalOperator(1, local, np.eye(2, dtype=complex))
    a = local.matrix
    m = None
    for j in range(n_sites - 1):
        f = np.kron(np.kron(np.eye(1 << j), a), np.eye(1 << (n_sites - 2 - j)))
        m = f if m is None else f @ m
    return GlobalOperator(n_sites, local, m)


def build_global_recursive(local: LocalOperator, n_sites: int,
                           cap: int = DENSE_SITE_CAP) -> GlobalOperator:
    """Dense global operator grown one site at a time by the block recursion.

    Adding a site on the left multiplies (I_2 (x) Q_n) by (Q_local (x) I) and
    rearranges the quadrants E, F, G, H of Q_n into a 4x4 grid of blocks with
    local-operator coefficients; this matches the Kronecker construction
    entrywise.
    """
    _check_sites(n_sites, cap)
    a = local.matrix
    cur = np.eye(2, dtype=complex)
    for _ in range(n_sites - 1):
        h = cur.shape[0] // 2
        quad = ((cur[:h, :h], cur[:h, h:]), (cur[h:, :h], cur[h:, h:]))
        grid = []
        for r in range(4):
            row = []
            for c in range(4):
                coeff = a[2 * (r // 2) + (c % 2), 2 * (c // 2) + (c % 2)]
                row.append(coeff * quad[r % 2][c % 2])
            grid.append(row)
        cur = np.block(grid)
    return GlobalOperator(n_sites, local, cur)


def _sweep_2d(matrix4: np.ndarray, n_sites: int, states: np.ndarray) -> np.ndarray:
    """Apply the global operator to a (2**n, b) batch of column states."""
    out = states
    for j in range(n_sites - 1):
        hi = 1 << j
        tail = out.shape[1] << (n_sites - 2 - j)
        blk = out.reshape(hi, 4, tail)
        out = np.einsum("pq,hqm->hpm", matrix4, blk).reshape(1 << n_sites, -1)
    return out


def apply_matrix_free(local: LocalOperator, n_sites: int, state,
                      cap: int = MATRIX_FREE_SITE_CAP) -> np.ndarray:
    """Apply the global operator to a state vector without building a matrix.

    Sweeps the local operator over the pairs (0,1), ..., (n-2,n-1) in order,
    which reproduces the dense operator's action exactly.
    """
    _check_sites(n_sites, cap)
    v = np.asarray(state)
    if v.shape != (1 << n_sites,):
        raise LengthMismatch("state has shape %r, expected (%d,)" % (v.shape, 1 << n_sites))
    v = v.astype(complex, copy=True)
    if n_sites == 1:
        return v
    return _sweep_2d(local.matrix, n_sites, v.reshape(-1, 1)).ravel()


# --- sampling and random families -------------------------------------------


def sample_pca_step(local: LocalOperator, bits, rng) -> tuple:
    """One synchronous update of the pair dynamics on the path (PCA locals).

    Each site x < n-1 resamples from the column (bits[x], bits[x+1]) of the
    local operator; the last site never changes.  All reads use the old bits,
    matching the action of the global operator on basis states.
    """
    bits = tuple(bits)
    m = local.matrix
    out = list(bits)
    for x in range(len(bits) - 1):
        i, j = bits[x], bits[x + 1]
        p_one = m[2 + j, 2 * i + j].real
        out[x] = 1 if rng.random() < p_one else 0
    return tuple(out)


def _haar_unitary_2(rng) -> np.ndarray:
    z = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r).copy()
    d[d == 0] = 1.0
    return q * (d / np.abs(d))


def random_local_operator(kind, rng, label: str | None = None) -> LocalOperator:
    """Draw a random local operator from a named family.

    Kinds: "pca" (uniform column pairs normalised to sum 1), "qca" (two Haar
    2x2 unitaries in the column blocks), "general" (complex Gaussian entries),
    "ca" (random deterministic rule) and "complex-stochastic" (complex column
    pairs summing to 1).
    """
    if isinstance(kind, OperatorKind):
        kind = kind.value
    m = np.zeros((4, 4), dtype=complex)
    if kind == "pca":
        for c in range(4):
            j = c % 2
            u = rng.random(2)
            w = u / u.sum()
            m[j, c], m[2 + j, c] = w[0], w[1]
    elif kind == "qca":
        u0 = _haar_unitary_2(rng)
        u1 = _haar_unitary_2(rng)
        m[0, 0], m[0, 2], m[2, 0], m[2, 2] = u0[0, 0], u0[0, 1], u0[1, 0], u0[1, 1]
        m[1, 1], m[1, 3], m[3, 1], m[3, 3] = u1[0, 0], u1[0, 1], u1[1, 0], u1[1, 1]
    elif kind == "general":
        for r in range(4):
            for c in range(4):
                if _ALLOWED_MASK[r, c]:
                    m[r, c] = (rng.standard_normal() + 1j * rng.standard_normal()) / np.sqrt(2)
    elif kind == "ca":
        for c in range(4):
            j = c % 2
            m[j + 2 * rng.integers(0, 2), c] = 1.0
    elif kind == "complex-stochastic":
        # column sums are exactly 1 but entries are free complex numbers
        for c in range(4):
            j = c % 2
            z = (rng.standard_normal() + 1j * rng.standard_normal()) / np.sqrt(2)
            m[j, c], m[2 + j, c] = z, 1.0 - z
    else:
        raise ValueError("unknown random family %r" % (kind,))
    return make_local_operator(m, label or "random-%s" % kind)
