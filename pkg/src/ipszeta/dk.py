"""Domany-Kinzel model: local operator, lattice dynamics and survival estimates.

The model updates every site of Z synchronously: site x becomes occupied with
probability f(c) where c = |current set  intersect {x, x+1}|, f(0) = 0,
f(1) = p, f(2) = q.  Started from a finite set, the occupied region can only
spread leftward, so a run with horizon T lives on a window of size span + T.

Monte Carlo trials are embarrassingly parallel.  Trial i draws all of its
randomness from a counter-based Philox stream keyed by (base_seed, i): at step
t it consumes span + t uniforms for the candidate sites, low site first, so
runs are reproducible for any worker count and prefixes agree across horizons.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import NoBracket, ParamOutOfRange
from .operators import LocalOperator, make_local_operator
from .spectral import SpectrumMultiset

RNG_NAME = "philox4x64(key=(base_seed, trial_index))"
_Z95 = 1.959963984540054


@dataclass(frozen=True)
class DKParams:
    """Pair (p, q) of update probabilities; attractive iff p <= q."""

    p: float
    q: float

    def __post_init__(self):
        for name, v in (("p", self.p), ("q", self.q)):
            if not 0.0 <= v <= 1.0:
                raise ParamOutOfRange("%s=%r outside [0, 1]" % (name, v))

    @classmethod
    def site_percolation(cls, p: float) -> "DKParams":
        return cls(p, p)

    @classmethod
    def bond_percolation(cls, p: float) -> "DKParams":
        return cls(p, 1.0 - (1.0 - p) ** 2)

    @property
    def attractive(self) -> bool:
        return self.p <= self.q

    def f(self, count: int) -> float:
        return (0.0, self.p, self.q)[count]


def dk_entries(p: float, q: float) -> np.ndarray:
    """Local 4x4 weight table for formal parameters (p, q), no range check.

    Columns (= source pairs) always sum to 1, so the algebraic identities of
    the stochastic family hold even when p or q leave [0, 1].
    """
    return np.array(
        [
            [1.0, 0.0, 1.0 - p, 0.0],
            [0.0, 1.0 - p, 0.0, 1.0 - q],
            [0.0, 0.0, p, 0.0],
            [0.0, p, 0.0, q],
        ]
    )


def dk_local_operator(params: DKParams) -> LocalOperator:
    return make_local_operator(dk_entries(params.p, params.q),
                               label="dk(p=%g, q=%g)" % (params.p, params.q))


def rho_q1_closed(p: float) -> float:
    """Closed-form survival probability at q = 1: 1 - ((1-p)/p)^2 above 1/2."""
    if not 0.0 <= p <= 1.0:
        raise ParamOutOfRange("p=%r outside [0, 1]" % (p,))
    if p <= 0.5:
        return 0.0
    return 1.0 - (1.0 - p) ** 2 / p ** 2


@dataclass(frozen=True)
class LatticeState:
    """Finite occupied set on Z at a given time."""

    occupied: tuple
    time: int = 0

    @classmethod
    def from_iterable(cls, sites, time: int = 0) -> "LatticeState":
        return cls(tuple(sorted(set(int(x) for x in sites))), time)

    @property
    def empty(self) -> bool:
        return not self.occupied


def dk_step(state: LatticeState, params: DKParams, rng) -> LatticeState:
    """One synchronous update; the empty set is absorbing.

    Candidate children are x in [min-1, max]; each is occupied independently
    with probability f(|parents|).  Draws one uniform per candidate site, low
    site first.
    """
    if state.empty:
        return LatticeState((), state.time + 1)
    lo, hi = state.occupied[0] - 1, state.occupied[-1]
    occ = np.zeros(hi - lo + 2, dtype=np.uint8)
    occ[np.array(state.occupied) - lo] = 1
    counts = occ[:-1] + occ[1:]
    ftab = np.array([0.0, params.p, params.q])
    keep = rng.random(len(counts)) < ftab[counts]
    sites = (np.nonzero(keep)[0] + lo).tolist()
    return LatticeState(tuple(int(x) for x in sites), state.time + 1)


# --- survival Monte Carlo ---------------------------------------------------


def wilson_interval(successes: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ParamOutOfRange("need at least one trial")
    phat = successes / trials
    denom = 1.0 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * np.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return (max(0.0, centre - half), min(1.0, centre + half))


def _trial_stream(base_seed: int, trial: int):
    key = np.array([base_seed, trial], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _run_chunk(args) -> int:
    p, q, rel, span, horizon, base_seed, lo_trial, hi_trial = args
    rel = np.asarray(rel, dtype=np.int64)
    ftab = np.array([0.0, p, q])
    width = horizon + span + 1  # one always-vacant pad slot on the right
    total_draws = horizon * span + horizon * (horizon + 1) // 2
    survived = 0
    for trial in range(lo_trial, hi_trial):
        rng = _trial_stream(base_seed, trial)
        draws = rng.random(total_draws)
        occ = np.zeros(width, dtype=np.uint8)
        occ[horizon + rel] = 1
        off = 0
        alive = True
        for t in range(1, horizon + 1):
            w = span + t
            s0 = horizon - t
            counts = occ[s0:s0 + w] + occ[s0 + 1:s0 + w + 1]
            new = draws[off:off + w] < ftab[counts]
            off += w
            occ[s0:s0 + w] = new
            if not new.any():
                alive = False
                break
        if alive:
            survived += 1
    return survived


@dataclass(frozen=True)
class SurvivalEstimate:
    p: float
    q: float
    seed_set: tuple
    horizon: int
    trials: int
    survived: int
    estimate: float
    ci: tuple[float, float]
    seed: int
    rng: str = RNG_NAME


def estimate_survival(params: DKParams, seed_set, horizon: int, trials: int,
                      base_seed: int = 0, workers: int = 1) -> SurvivalEstimate:
    """Fraction of trials whose occupied set is nonempty at the horizon.

    The empty seed set never survives (its estimate is exactly 0); otherwise
    trials are run on the fixed leftward-growing window with early exit on
    extinction.  Chunks of trials may run in parallel processes; results do
    not depend on the worker count.
    """
    if horizon < 1 or trials < 1:
        raise ParamOutOfRange("need horizon >= 1 and trials >= 1")
    a = tuple(sorted(set(int(x) for x in seed_set)))
    if not a:
        # no sampling happens: the empty set is absorbing by definition
        return SurvivalEstimate(params.p, params.q, a, horizon, trials, 0, 0.0,
                                (0.0, 0.0), base_seed)
    span = a[-1] - a[0] + 1
    rel = [x - a[0] for x in a]
    if workers <= 1:
        survived = _run_chunk((params.p, params.q, rel, span, horizon, base_seed, 0, trials))
    else:
        chunk = max(1, -(-trials // workers))
        jobs = [(params.p, params.q, rel, span, horizon, base_seed, lo, min(lo + chunk, trials))
                for lo in range(0, trials, chunk)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            survived = sum(pool.map(_run_chunk, jobs))
    est = survived / trials
    return SurvivalEstimate(params.p, params.q, a, horizon, trials, survived, est,
                            wilson_interval(survived, trials), base_seed)


# --- critical scans ---------------------------------------------------------

LABEL_SURVIVAL = "survival"
LABEL_EXTINCTION = "extinction"


@dataclass(frozen=True)
class CriticalScanResult:
    q: float
    threshold: float
    points: tuple
    labels: tuple
    bracket: tuple[float, float]


def _point_seed(base_seed: int, index: int) -> int:
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def scan_critical(q: float, p_grid, horizon: int, trials: int, threshold: float = 0.02,
                  base_seed: int = 0, seed_set=(0,), workers: int = 1) -> CriticalScanResult:
    """Estimate survival along a p-grid and bracket the threshold crossing.

    Points with estimate below the threshold are labeled extinction, others
    survival; the bracket is the first adjacent pair straddling the threshold.
    Raises NoBracket if the labels never change across the grid.
    """
    grid = [float(p) for p in p_grid]
    if len(grid) < 2 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ParamOutOfRange("p_grid must be increasing with at least two points")
    if not 0.0 < threshold < 1.0:
        raise ParamOutOfRange("threshold must be in (0, 1)")
    points = []
    for i, p in enumerate(grid):
        params = DKParams(p, q)
        points.append(estimate_survival(params, seed_set, horizon, trials,
                                        base_seed=_point_seed(base_seed, i), workers=workers))
    labels = tuple(LABEL_EXTINCTION if pt.estimate < threshold else LABEL_SURVIVAL
                   for pt in points)
    bracket = None
    for i in range(len(grid) - 1):
        if labels[i] != labels[i + 1]:
            bracket = (grid[i], grid[i + 1])
            break
    if bracket is None:
        raise NoBracket("survival estimates never cross %g on the grid" % threshold)
    return CriticalScanResult(q, threshold, tuple(points), labels, bracket)


# --- small-system reference spectrum ----------------------------------------


def dk_reference_spectrum_n3(params: DKParams) -> SpectrumMultiset:
    """Closed-form spectrum of the 3-site operator:
    {1, 1, p, p, q-p, p(q-p), lambda+, lambda-} with
    lambda+- = (-k +- sqrt(k^2 - 4p(p-q)^2))/2, k = p^2 - q^2 + pq - p."""
    p, q = params.p, params.q
    k = p * p - q * q + p * q - p
    disc = np.sqrt(complex(k * k - 4 * p * (p - q) ** 2))
    lp = (-k + disc) / 2
    lm = (-k - disc) / 2
    values = [1.0, 1.0, p, p, q - p, p * (q - p), lp, lm]
    return SpectrumMultiset.from_pairs(values, [1] * 8, 8)
