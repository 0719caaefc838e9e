"""Closed-form connectivity predictions for the 1-D Poisson road model and a
square-lattice bond-percolation Monte Carlo engine.

The road-segment bridging probability is bracketed by two independent
per-segment conditions:

* necessary ("upper"): with a vehicle assumed at the center of both end
  intersections, the segment is bridged iff the on-segment vehicles chain the
  two ends with every gap at most r.
* sufficient ("lower"): the segment is fully covered by radius r/2 disks
  centered on the segment's own vehicles, which makes adjacent covered
  segments connected regardless of neighboring segments.

Both are evaluated exactly.  The chain probability is the classical
alternating series in lam * exp(-lam r); the coverage probability is a
Poisson mixture of spacing inclusion-exclusion terms.  Both series alternate,
so terms are accumulated with compensated summation and evaluation falls back
to direct Monte Carlo (with a warning) when term magnitudes pass 1e15.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import brentq
from scipy.sparse.csgraph import connected_components

_TERM_LIMIT = 1e15
_CLAMP_TOL = 1e-9
_MC_FALLBACK_TRIALS = 200_000


@dataclass(frozen=True)
class PoissonLineModel:
    """1-D stationary vehicle model on one road (both directions summed).

    lam is in vehicles/meter; the effective intensity entering every formula
    is lam * rho (only equipped vehicles count).
    """

    lam: float               # vehicles per meter of road
    r: float                 # connectivity range, meters
    L: float                 # segment length, meters
    rho: float = 1.0         # market penetration
    v_bar: float | None = None  # mean speed, m/s (for the flow conversion)
    f: float | None = None      # arrival rate, vehicles/s per direction

    def __post_init__(self):
        if self.lam < 0 or self.r <= 0 or self.L <= 0:
            raise ValueError("lam must be >= 0 and r, L positive")
        if not 0 < self.rho <= 1:
            raise ValueError(f"market penetration must be in (0, 1], got {self.rho}")

    @property
    def effective_lam(self) -> float:
        return self.lam * self.rho


@dataclass(frozen=True)
class LatticePercolation:
    """Bond percolation on an n x n site square lattice."""

    n: int
    p: float
    trials: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"lattice side must be >= 2, got {self.n}")
        if not 0 <= self.p <= 1:
            raise ValueError(f"edge probability must be in [0, 1], got {self.p}")
        if self.trials < 1:
            raise ValueError("need at least one trial")


def lambda_from_flow(f: float, v_bar: float) -> float:
    """Road intensity 2 f / v_bar (vehicles/m); f in vehicles/s per direction.

    The factor 2 accounts for the two directions of a road.
    """
    if v_bar <= 0:
        raise ValueError(f"mean speed must be positive, got {v_bar}")
    return 2.0 * f / v_bar


def expected_isolated(model: PoissonLineModel) -> float:
    """Stationary-regime isolated fraction exp(-2 lam rho r)."""
    return math.exp(-2.0 * model.effective_lam * model.r)


def _finalize(value: float, what: str) -> float:
    if not math.isfinite(value):
        raise FloatingPointError(f"{what} evaluated to {value}")
    if value < -_CLAMP_TOL or value > 1.0 + _CLAMP_TOL:
        raise FloatingPointError(
            f"{what} = {value} strays from [0, 1] beyond tolerance {_CLAMP_TOL}")
    return min(1.0, max(0.0, value))


def _chain_series(lam: float, r: float, L: float) -> tuple[float, float]:
    """Alternating series for the endpoint-anchored chain probability, L >= r.

    Returns (value, max |term|) so callers can detect cancellation blowup.
    """
    a = lam * math.exp(-lam * r)
    m = math.floor(L / r)
    terms = []
    for i in range(m + 1):
        terms.append((-a * (L - i * r)) ** i / math.factorial(i))
    for i in range(m):
        terms.append(-math.exp(-lam * r) * (-a * (L - (i + 1) * r)) ** i / math.factorial(i))
    return math.fsum(terms), max(abs(t) for t in terms)


def p_upper(model: PoissonLineModel) -> float:
    """Probability of the necessary bridging condition for one segment.

    With vehicles assumed at both end intersections, this is the probability
    that the Poisson(lam rho) vehicles on the segment chain the two ends with
    all gaps <= r; equals 1 whenever L < r.
    """
    lam, r, L = model.effective_lam, model.r, model.L
    if L < r:
        return 1.0
    if lam == 0.0:
        return 0.0
    value, biggest = _chain_series(lam, r, L)
    if biggest > _TERM_LIMIT:
        warnings.warn(
            "chain series terms exceed 1e15; falling back to Monte Carlo",
            RuntimeWarning, stacklevel=2)
        return _mc_chain_probability(lam, r, L, _MC_FALLBACK_TRIALS,
                                     np.random.default_rng(0))
    return _finalize(value, "p_upper")


def p_lower(model: PoissonLineModel) -> float:
    """Probability of the sufficient bridging condition for one segment.

    Exact probability that [0, L] is covered by radius r/2 disks centered on
    the segment's own Poisson(lam rho) vehicles: first vehicle within r/2 of
    one end, last within r/2 of the other, and no inter-vehicle gap above r.
    Evaluated as a Poisson mixture of spacing inclusion-exclusion sums.
    """
    lam, r, L = model.effective_lam, model.r, model.L
    if lam == 0.0:
        return 0.0
    a = r / 2.0
    mean = lam * L
    n_max = int(mean + 12.0 * math.sqrt(mean) + 40.0)
    outer = []
    biggest = 0.0
    for n in range(1, n_max + 1):
        log_w = -mean + n * math.log(mean) - math.lgamma(n + 1)
        if log_w < -40.0 and n > mean:
            break
        w = math.exp(log_w)
        inner = []
        for k in range(n):                # k middle gaps above r, k <= n-1
            c_k = math.comb(n - 1, k)
            for e, c_e in ((0, 1.0), (1, 2.0), (2, 1.0)):  # end gaps above r/2
                rem = 1.0 - (k * r + e * a) / L
                if rem <= 0.0:
                    break
                term = (-1.0) ** (k + e) * c_k * c_e * rem ** n
                inner.append(term)
        if inner:
            s = math.fsum(inner)
            biggest = max(biggest, w * max(abs(t) for t in inner))
            outer.append(w * s)
    if biggest > _TERM_LIMIT:
        warnings.warn(
            "coverage series terms exceed 1e15; falling back to Monte Carlo",
            RuntimeWarning, stacklevel=2)
        return _mc_coverage_probability(lam, r, L, _MC_FALLBACK_TRIALS,
                                        np.random.default_rng(0))
    return _finalize(math.fsum(outer), "p_lower")


def _mc_chain_probability(lam: float, r: float, L: float, trials: int,
                          rng: np.random.Generator) -> float:
    """Monte Carlo estimate of the necessary (chain) condition."""
    counts = rng.poisson(lam * L, size=trials)
    hits = 0
    for n in range(int(counts.max()) + 1):
        sel = int((counts == n).sum())
        if sel == 0:
            continue
        if n == 0:
            hits += sel if L <= r else 0
            continue
        pts = np.sort(rng.uniform(0.0, L, size=(sel, n)), axis=1)
        full = np.concatenate(
            [np.zeros((sel, 1)), pts, np.full((sel, 1), L)], axis=1)
        hits += int((np.diff(full, axis=1) <= r).all(axis=1).sum())
    return hits / trials


def _mc_coverage_probability(lam: float, r: float, L: float, trials: int,
                             rng: np.random.Generator) -> float:
    """Monte Carlo estimate of the sufficient (on-segment coverage) condition."""
    counts = rng.poisson(lam * L, size=trials)
    hits = 0
    for n in range(1, int(counts.max()) + 1):
        sel = int((counts == n).sum())
        if sel == 0:
            continue
        pts = np.sort(rng.uniform(0.0, L, size=(sel, n)), axis=1)
        ok = (pts[:, 0] <= r / 2) & (pts[:, -1] >= L - r / 2)
        if n > 1:
            ok &= (np.diff(pts, axis=1) <= r).all(axis=1)
        hits += int(ok.sum())
    return hits / trials


def largest_cluster_fraction(n: int, p: float, rng: np.random.Generator) -> float:
    """One bond-percolation trial: largest component site count over n^2.

    Components are computed over sites joined by open edges with
    scipy.sparse.csgraph; edges open independently with probability p.
    """
    right = rng.random((n, n - 1)) < p
    down = rng.random((n - 1, n)) < p
    idx = np.arange(n * n).reshape(n, n)
    src = np.concatenate([idx[:, :-1][right], idx[:-1, :][down]])
    if src.size == 0:
        return 1.0 / (n * n)
    dst = np.concatenate([idx[:, 1:][right], idx[1:, :][down]])
    g = sparse.coo_matrix((np.ones(src.size, dtype=np.int8), (src, dst)),
                          shape=(n * n, n * n))
    _, labels = connected_components(g, directed=False)
    return float(np.bincount(labels).max()) / (n * n)


def lattice_theta(cfg: LatticePercolation) -> float:
    """Monte-Carlo mean largest-cluster site fraction over cfg.trials."""
    return float(np.mean(lattice_theta_trials(cfg)))


def lattice_theta_trials(cfg: LatticePercolation) -> np.ndarray:
    """Per-trial largest-cluster fractions with independent spawned generators.

    Each trial owns a generator spawned from the root seed, so results do not
    depend on execution order and the reduction is deterministic.
    """
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.trials)
    return np.array([largest_cluster_fraction(cfg.n, cfg.p, np.random.default_rng(c))
                     for c in children])


def predict_transition_density(L: float, r: float, rho: float = 1.0,
                               bracket_hi: float = 10.0) -> tuple[float, float]:
    """Densities (veh/m) where the bridging bounds cross the lattice threshold 1/2.

    Solves p_upper(lam rho) = 1/2 for the low edge and p_lower(lam rho) = 1/2
    for the high edge; the percolation density of the grid VANET lies between
    them.  Requires L >= r (shorter segments are trivially supercritical).
    """
    if L < r:
        raise ValueError(f"L = {L} < r = {r}: every segment is trivially bridged")

    def f_upper(lam: float) -> float:
        return p_upper(PoissonLineModel(lam=lam, r=r, L=L, rho=rho)) - 0.5

    def f_lower(lam: float) -> float:
        return p_lower(PoissonLineModel(lam=lam, r=r, L=L, rho=rho)) - 0.5

    lo_edge = 1e-12
    for f in (f_upper, f_lower):
        if f(lo_edge) > 0 or f(bracket_hi) < 0:
            raise ValueError("no root of the bridging bound in the search bracket")
    lam_lo = brentq(f_upper, lo_edge, bracket_hi, xtol=1e-14, rtol=8.9e-16)
    lam_hi = brentq(f_lower, lo_edge, bracket_hi, xtol=1e-14, rtol=8.9e-16)
    return float(lam_lo), float(lam_hi)
