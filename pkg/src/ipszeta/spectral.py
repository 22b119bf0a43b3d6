"""Spectra of global operators: dense eigensolves, multiset bookkeeping,
recursion checks, closed-form traces and eigenvalue histograms.

Eigenvalue multisets are kept as (value, multiplicity) pairs.  Comparisons and
unions use greedy nearest-neighbour matching at an explicit tolerance, since
repeated eigenvalues of these non-normal operators come back from a dense
solver as small clusters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import NoConvergence, ParamOutOfRange, SizeCapExceeded
from .operators import GlobalOperator, LocalOperator, build_global_recursive

EIG_DIM_CAP = 1 << 10
EIG_DIM_HARD_CAP = 1 << 12


@dataclass(frozen=True, eq=False)
class SpectrumMultiset:
    """Eigenvalues with multiplicities; total count equals the matrix dimension."""

    values: np.ndarray
    multiplicities: np.ndarray
    source_dim: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        m = np.asarray(self.multiplicities, dtype=np.int64)
        if v.shape != m.shape or v.ndim != 1:
            raise ParamOutOfRange("values and multiplicities must be matching 1-d arrays")
        if int(m.sum()) != self.source_dim:
            raise ParamOutOfRange(
                "multiplicities sum to %d, expected dimension %d" % (m.sum(), self.source_dim)
            )
        v.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "multiplicities", m)

    @classmethod
    def from_eigenvalues(cls, eigs, cluster_tol: float) -> "SpectrumMultiset":
        """Cluster raw eigenvalues within cluster_tol into (value, count) pairs."""
        eigs = np.asarray(eigs, dtype=complex).ravel()
        order = np.lexsort((eigs.imag, eigs.real))
        sums: list[complex] = []
        counts: list[int] = []
        for z in eigs[order]:
            if sums:
                reps = np.array(sums) / np.array(counts)
                j = int(np.abs(reps - z).argmin())
                if abs(reps[j] - z) <= cluster_tol:
                    sums[j] += z
                    counts[j] += 1
                    continue
            sums.append(z)
            counts.append(1)
        vals = np.array(sums) / np.array(counts)
        return cls(vals, np.array(counts), len(eigs))

    @classmethod
    def from_pairs(cls, values, multiplicities, source_dim: int) -> "SpectrumMultiset":
        """Build from pairs, merging exactly equal values."""
        acc: dict[complex, int] = {}
        for v, m in zip(values, multiplicities):
            key = complex(v)
            acc[key] = acc.get(key, 0) + int(m)
        keys = sorted(acc, key=lambda z: (z.real, z.imag))
        return cls(np.array(keys), np.array([acc[k] for k in keys]), source_dim)

    @property
    def total(self) -> int:
        return int(self.multiplicities.sum())

    def expand(self) -> np.ndarray:
        """Flat array with repetitions, sorted by (real, imag)."""
        flat = np.repeat(self.values, self.multiplicities)
        return flat[np.lexsort((flat.imag, flat.real))]

    def moment(self, r: int) -> complex:
        return complex(np.sum(self.multiplicities * self.values ** r))

    def spectral_radius(self) -> float:
        return float(np.abs(self.values).max()) if len(self.values) else 0.0


def spec_union(a: SpectrumMultiset, b: SpectrumMultiset, tol: float) -> SpectrumMultiset:
    """Multiset union: multiplicities of values matching within tol are added."""
    vals = list(a.values)
    mults = list(a.multiplicities)
    for v, m in zip(b.values, b.multiplicities):
        d = np.abs(np.array(vals) - v)
        j = int(d.argmin())
        if d[j] <= tol:
            mults[j] += int(m)
        else:
            vals.append(complex(v))
            mults.append(int(m))
    return SpectrumMultiset(np.array(vals), np.array(mults), a.source_dim + b.source_dim)


def match_multisets(a: SpectrumMultiset, b: SpectrumMultiset, tol: float):
    """Greedy nearest-neighbour matching; returns (matched, worst distance)."""
    xa, xb = a.expand(), b.expand()
    if len(xa) != len(xb):
        return False, float("inf")
    used = np.zeros(len(xb), dtype=bool)
    worst = 0.0
    for x in xa:
        d = np.abs(xb - x)
        d[used] = np.inf
        j = int(d.argmin())
        used[j] = True
        worst = max(worst, float(d[j]))
    return worst <= tol, worst


def eig_dense(matrix, tol: float = 1e-8, cluster_tol: float | None = None,
              max_dim: int = EIG_DIM_CAP, samples: int = 8) -> SpectrumMultiset:
    """Full spectrum of a dense matrix with a residual check on sampled pairs.

    Clusters repeated eigenvalues at cluster_tol (default 1e-6 * max(1, rho)).
    Raises SizeCapExceeded above max_dim and NoConvergence if the solver fails
    or a sampled eigenpair misses the residual bound tol * ||A||.
    """
    if isinstance(matrix, GlobalOperator):
        matrix = matrix.dense
    a = np.asarray(matrix, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix, got shape %r" % (a.shape,))
    dim = a.shape[0]
    if max_dim > EIG_DIM_HARD_CAP:
        raise ParamOutOfRange("max_dim %d beyond hard cap %d" % (max_dim, EIG_DIM_HARD_CAP))
    if dim > max_dim:
        raise SizeCapExceeded("dimension %d exceeds eigensolver cap %d" % (dim, max_dim))
    try:
        w, v = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence("dense eigensolver failed: %s" % exc) from exc
    norm = float(np.linalg.norm(a))
    if norm > 0:
        picked = np.argsort(-np.abs(w))[: min(samples, dim)]
        for j in picked:
            res = float(np.linalg.norm(a @ v[:, j] - w[j] * v[:, j]))
            if res > tol * norm:
                raise NoConvergence(
                    "eigenpair residual %.3e exceeds %.3e for eigenvalue %r"
                    % (res, tol * norm, w[j])
                )
    if cluster_tol is None:
        rho = float(np.abs(w).max()) if dim else 0.0
        cluster_tol = 1e-6 * max(1.0, rho)
    return SpectrumMultiset.from_eigenvalues(w, cluster_tol)


@dataclass
class VerificationReport:
    """Outcome of a named numerical claim check."""

    claim: str
    n_sites: int
    tol: float
    passed: bool
    worst_residual: float
    details: dict = field(default_factory=dict)


def shift_coefficients(local: LocalOperator) -> tuple[complex, complex]:
    """The per-column-block shifts a[(1,0)][(1,0)] - a[(1,0)][(0,0)] and
    a[(1,1)][(1,1)] - a[(1,1)][(0,1)] that drive the spectral recursion."""
    a = local.matrix
    return complex(a[2, 2] - a[2, 0]), complex(a[3, 3] - a[3, 1])


def verify_spectral_recursion(local: LocalOperator, n_sites: int, tol: float = 1e-7,
                              max_dim: int = EIG_DIM_CAP) -> VerificationReport:
    """Check that growing the system by one site splits the spectrum as
    Spec(Q_{n+1}) = Spec(Q_n) united with Spec(Q_n D), where D carries the two
    column-block shifts on the halves of the index space.

    The identity holds whenever the local operator's columns each sum to 1
    (stochastic-type weights); the report carries the worst matched distance.
    """
    qn = build_global_recursive(local, n_sites).dense
    qn1 = build_global_recursive(local, n_sites + 1).dense
    t0, t1 = shift_coefficients(local)
    half = 1 << (n_sites - 1)
    d = np.concatenate([np.full(half, t0), np.full(half, t1)])
    lhs = eig_dense(qn1, max_dim=max_dim)
    rhs = spec_union(eig_dense(qn, max_dim=max_dim), eig_dense(qn * d, max_dim=max_dim), tol=0.0)
    passed, worst = match_multisets(lhs, rhs, tol)
    return VerificationReport(
        claim="spectral-recursion",
        n_sites=n_sites,
        tol=tol,
        passed=passed,
        worst_residual=worst,
        details={"shifts": [t0, t1]},
    )


def t_case_spectrum(t: complex, n_sites: int) -> SpectrumMultiset:
    """Spectrum {t^k with multiplicity 2*C(n-1,k)} of a shift-t global operator.

    Applies when both column-block shifts equal t and columns sum to 1; the
    k = 0 power is 1 even at t = 0.
    """
    if n_sites < 1:
        raise ParamOutOfRange("need n_sites >= 1")
    values = [1.0 + 0j if k == 0 else complex(t) ** k for k in range(n_sites)]
    mults = [2 * comb(n_sites - 1, k) for k in range(n_sites)]
    return SpectrumMultiset.from_pairs(values, mults, 1 << n_sites)


# --- histograms -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HistogramGrid:
    """Eigenvalue counts on a square grid over [-1,1] x [-1,1].

    Bins are half-open [low, low+bin) except the last bin on each axis, which
    is closed so the boundary value 1 is counted.  Values outside the square
    go to overflow.
    """

    bin_size: float
    counts: np.ndarray
    overflow: int
    low: float = -1.0
    high: float = 1.0

    @property
    def n_bins(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum()) + self.overflow


def _bin_index(v: float, low: float, high: float, bin_size: float, n_bins: int):
    if v < low or v > high:
        return None
    i = int((v - low) / bin_size)
    return min(i, n_bins - 1)


def histogram(spec: SpectrumMultiset, bin_size: float = 0.05) -> HistogramGrid:
    """Histogram of a spectrum over the square [-1,1]^2 in the complex plane."""
    if bin_size <= 0:
        raise ParamOutOfRange("bin_size must be positive")
    low, high = -1.0, 1.0
    n_bins = int(np.ceil((high - low) / bin_size - 1e-9))
    counts = np.zeros((n_bins, n_bins), dtype=np.int64)
    overflow = 0
    for v, m in zip(spec.values, spec.multiplicities):
        ix = _bin_index(v.real, low, high, bin_size, n_bins)
        iy = _bin_index(v.imag, low, high, bin_size, n_bins)
        if ix is None or iy is None:
            overflow += int(m)
        else:
            counts[ix, iy] += int(m)
    return HistogramGrid(bin_size, counts, overflow)


# --- closed-form trace ------------------------------------------------------


@dataclass(frozen=True)
class ClosedFormTrace:
    """Characteristic data of the two-term trace recursion.

    x_plus and x_minus are the roots of x^2 - (a00+a11) x - (a01*a10 - a00*a11)
    built from the four self-transition weights a_ij = a[(i,j)][(i,j)]; the
    lambda factors weight the two root powers in the closed form.  When the
    (0,1) self-weight vanishes or the roots collide the closed form divides by
    ~0 and is flagged degenerate.
    """

    x_plus: complex
    x_minus: complex
    lambda_plus: complex
    lambda_minus: complex
    degenerate: bool

    @classmethod
    def from_local(cls, local: LocalOperator, guard: float = 1e-12) -> "ClosedFormTrace":
        t = local.self_transition_table()
        a00, a01, a10, a11 = t[0, 0], t[0, 1], t[1, 0], t[1, 1]
        disc = np.sqrt(complex((a00 - a11) ** 2 + 4 * a01 * a10))
        xp = (a00 + a11 + disc) / 2
        xm = (a00 + a11 - disc) / 2
        lp = (a01 - a00 + xp) * (a00 + a01 - xm)
        lm = (a01 - a00 + xm) * (a00 + a01 - xp)
        degen = abs(a01) <= guard or abs(xp - xm) <= guard
        return cls(complex(xp), complex(xm), complex(lp), complex(lm), degen)


def trace_closed_form(local: LocalOperator, n_sites: int) -> complex:
    """Trace of the n-site global operator from the two characteristic roots.

    Falls back to the transfer-table path sum when the closed form is
    degenerate (vanishing (0,1) self-weight or coincident roots).
    """
    if n_sites < 1:
        raise ParamOutOfRange("need n_sites >= 1")
    cf = ClosedFormTrace.from_local(local)
    if cf.degenerate:
        t = local.self_transition_table()
        return complex(np.linalg.matrix_power(t, n_sites - 1).sum())
    a01 = local.self_transition_table()[0, 1]
    num = cf.x_plus ** (n_sites - 1) * cf.lambda_plus - cf.x_minus ** (n_sites - 1) * cf.lambda_minus
    return complex(num / (a01 * (cf.x_plus - cf.x_minus)))
