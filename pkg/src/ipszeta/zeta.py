"""Normalized power-trace zeta function of a global operator.

For an n-site operator Q the function is det(I - uQ)^(-1/2^n), represented
either by its log series sum_r C_r u^r / r with C_r = tr(Q^r)/2^n, or by the
determinant form evaluated from the dense spectrum with per-factor principal
logarithms.  The exponentiated series is the canonical branch.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ParamOutOfRange, SingularFactor, SizeCapExceeded
from .operators import (
    LocalOperator,
    _sweep_2d,
    apply_matrix_free,
    build_global_recursive,
    qca_rotation_local,
)
from .spectral import EIG_DIM_CAP, VerificationReport, eig_dense

# Traces via sweeps never materialise a matrix power; still, visiting all
# basis columns is quadratic in the state size, so cap separately from the
# matrix-free vector cap.
TRACE_SITE_CAP = 14


def trace_path_sum(local: LocalOperator, n_sites: int) -> complex:
    """Trace of the n-site operator as the grand sum of the (n-1)-st power of
    the 2x2 self-transition table; equals 2 at n = 1."""
    if n_sites < 1:
        raise ParamOutOfRange("need n_sites >= 1")
    t = local.self_transition_table()
    return complex(np.linalg.matrix_power(t, n_sites - 1).sum())


def power_trace_coefficients(local: LocalOperator, n_sites: int, r_max: int,
                             cap: int = TRACE_SITE_CAP, batch: int | None = None) -> np.ndarray:
    """C_1..C_rmax with C_r = tr(Q^r)/2^n, by sweeping batches of basis columns.

    The diagonal of each power is accumulated from matrix-free applications,
    so no dense power is ever stored.
    """
    if n_sites < 1:
        raise ParamOutOfRange("need n_sites >= 1")
    if n_sites > cap:
        raise SizeCapExceeded("n=%d exceeds trace cap %d" % (n_sites, cap))
    if r_max < 1:
        raise ParamOutOfRange("need r_max >= 1")
    dim = 1 << n_sites
    if batch is None:
        batch = max(1, min(dim, (1 << 22) // dim))
    out = np.zeros(r_max, dtype=complex)
    if n_sites == 1:
        out[:] = 1.0  # identity operator: tr(I)/2 = 1 for every power
        return out
    for start in range(0, dim, batch):
        cols = np.arange(start, min(start + batch, dim))
        states = np.zeros((dim, len(cols)), dtype=complex)
        states[cols, np.arange(len(cols))] = 1.0
        for r in range(1, r_max + 1):
            states = _sweep_2d(local.matrix, n_sites, states)
            out[r - 1] += states[cols, np.arange(len(cols))].sum()
    return out / dim


def c_r(local: LocalOperator, n_sites: int, r: int, cap: int = TRACE_SITE_CAP) -> complex:
    """Normalized power trace tr(Q^r)/2^n."""
    return complex(power_trace_coefficients(local, n_sites, r, cap=cap)[r - 1])


def spectral_radius_estimate(local: LocalOperator, n_sites: int, steps: int = 50,
                             safety: float = 1.1, seed: int = 0) -> float:
    """Power-iteration estimate of the spectral radius, padded by a safety factor."""
    rng = np.random.default_rng(seed)
    dim = 1 << n_sites
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    rate = 0.0
    for _ in range(steps):
        w = apply_matrix_free(local, n_sites, v)
        rate = float(np.linalg.norm(w))
        if rate == 0.0:
            break
        v = w / rate
    return max(rate * safety, 1e-12)


@dataclass(frozen=True, eq=False)
class ZetaSeries:
    """Truncated log-zeta series with a convergence-radius hint (1/rho-hat)."""

    n_sites: int
    r_max: int
    coefficients: np.ndarray
    radius_hint: float

    def evaluate(self, u: complex) -> complex:
        """log zeta at u from the truncated series."""
        r = np.arange(1, self.r_max + 1)
        return complex(np.sum(self.coefficients * np.power(complex(u), r) / r))

    def truncation_bound(self, u: complex) -> float | None:
        """Tail bound for the truncation, valid when rho_hat * |u| < 1."""
        rho = 1.0 / self.radius_hint
        x = rho * abs(u)
        if x >= 1.0:
            return None
        return x ** (self.r_max + 1) / ((self.r_max + 1) * (1.0 - x))


def zeta_log_series(local: LocalOperator, n_sites: int, r_max: int,
                    cap: int = TRACE_SITE_CAP) -> ZetaSeries:
    coeffs = power_trace_coefficients(local, n_sites, r_max, cap=cap)
    rho = spectral_radius_estimate(local, n_sites)
    return ZetaSeries(n_sites, r_max, coeffs, 1.0 / rho)


def zeta_det(local: LocalOperator, n_sites: int, u: complex,
             max_dim: int = EIG_DIM_CAP) -> complex:
    """Zeta value from the determinant form, per-factor principal logs.

    Raises SingularFactor when some eigenvalue satisfies lambda * u = 1.  For
    |u| at or beyond the reciprocal spectral radius a value is still returned
    but the 2^n-th root branch is ambiguous; a warning is emitted.
    """
    if n_sites == 1:
        spec = None
        w = np.array([1.0 + 0j])
        m = np.array([2])
    else:
        dense = build_global_recursive(local, n_sites).dense
        spec = eig_dense(dense, max_dim=max_dim)
        w, m = spec.values, spec.multiplicities
    u = complex(u)
    factors = 1.0 - w * u
    if np.any(np.abs(factors) < 1e-15):
        raise SingularFactor("1 - lambda*u vanishes at u = %r" % (u,))
    rho = float(np.abs(w).max())
    if rho > 0 and abs(u) * rho >= 1.0:
        warnings.warn("u is outside the convergence disk; branch is ambiguous",
                      RuntimeWarning, stacklevel=2)
    return complex(np.exp(-np.sum(m * np.log(factors)) / (1 << n_sites)))


# --- closed forms on the shift-t family -------------------------------------


@dataclass(frozen=True, eq=False)
class BinomialWeights:
    """Symmetric binomial weights P(X_n = k) = C(n,k)/2^n."""

    n: int
    weights: np.ndarray

    @classmethod
    def for_n(cls, n: int) -> "BinomialWeights":
        if n < 0:
            raise ParamOutOfRange("need n >= 0")
        w = np.array([math.comb(n, k) for k in range(n + 1)], dtype=float) / (1 << n)
        return cls(n, w)

    def signed_support(self) -> np.ndarray:
        """Values 2k - n of the centred walk variable."""
        return 2 * np.arange(self.n + 1) - self.n


def t_case_c_r(t: complex, n_sites: int, r: int) -> complex:
    """Closed-form coefficient ((1 + t^r)/2)^(n-1) on the shift-t family."""
    if n_sites < 1 or r < 1:
        raise ParamOutOfRange("need n_sites >= 1 and r >= 1")
    return complex(((1.0 + complex(t) ** r) / 2.0) ** (n_sites - 1))


def t_case_log_zeta(t: complex, n_sites: int, u: complex) -> complex:
    """log zeta on the shift-t family: a binomial average of -log(1 - t^k u)."""
    if n_sites < 1:
        raise ParamOutOfRange("need n_sites >= 1")
    bw = BinomialWeights.for_n(n_sites - 1)
    u = complex(u)
    powers = np.array([1.0 + 0j if k == 0 else complex(t) ** k for k in range(n_sites)])
    factors = 1.0 - powers * u
    if np.any(np.abs(factors) < 1e-15):
        raise SingularFactor("1 - t^k u vanishes at u = %r" % (u,))
    return complex(-np.sum(bw.weights * np.log(factors)))


def qca_rotation_check(xi: float, n_sites: int, r_max: int,
                       tol: float = 1e-9) -> VerificationReport:
    """Verify C_r = (cos r*xi)^(n-1) for the rotation-type unitary operator."""
    local = qca_rotation_local(xi)
    coeffs = power_trace_coefficients(local, n_sites, r_max)
    r = np.arange(1, r_max + 1)
    expected = np.cos(r * xi) ** (n_sites - 1) + 0j
    worst = float(np.abs(coeffs - expected).max())
    return VerificationReport(
        claim="qca-rotation",
        n_sites=n_sites,
        tol=tol,
        passed=worst <= tol,
        worst_residual=worst,
        details={"xi": xi, "r_max": r_max},
    )
