"""Monte Carlo experiments probing the tail inequalities at desk scale.

Replications are independent tasks keyed by stream id, so results are
bit-identical regardless of how they are distributed over workers.
Empirical probabilities carry Wilson score intervals; inequality checks
against Monte Carlo estimates must include both sides' slack.
"""
from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from math import factorial, log, sqrt

import numpy as np

from .chaos import ChaosCoefficients
from .kernels import FunctionFamily, interval_family, interval_space
from .spaces import ProbabilitySpace, point_counts, signed_increment
from .statistics import _PARTITIONS, SampleDraw, draw_bundle

WILSON_Z = 1.959963984540054  # 95%


def wilson_interval(successes: int, trials: int):
    """Wilson score interval; behaves sensibly at p near 0 and 1."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    z2 = WILSON_Z ** 2
    phat = successes / trials
    denom = 1.0 + z2 / trials
    center = (phat + z2 / (2 * trials)) / denom
    half = WILSON_Z * sqrt(phat * (1 - phat) / trials + z2 / (4 * trials ** 2)) / denom
    return center - half, center + half


@dataclass(frozen=True)
class TailCurve:
    x_grid: np.ndarray
    probs: np.ndarray
    ci_lo: np.ndarray
    ci_hi: np.ndarray
    replications: int

    def __post_init__(self):
        for name in ("x_grid", "probs", "ci_lo", "ci_hi"):
            a = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, a)
            a.setflags(write=False)

    @property
    def wilson_halfwidths(self) -> np.ndarray:
        return (self.ci_hi - self.ci_lo) / 2.0

    @classmethod
    def from_maxima(cls, maxima: np.ndarray, x_grid) -> "TailCurve":
        x_grid = np.asarray(x_grid, dtype=float)
        reps = maxima.size
        probs = np.empty_like(x_grid)
        lo = np.empty_like(x_grid)
        hi = np.empty_like(x_grid)
        for i, x in enumerate(x_grid):
            hits = int(np.count_nonzero(maxima >= x))
            probs[i] = hits / reps
            lo[i], hi[i] = wilson_interval(hits, reps)
        return cls(x_grid=x_grid, probs=probs, ci_lo=lo, ci_hi=hi,
                   replications=reps)


# ---------------------------------------------------------------------------
# per-replication statistic weights: stat(f) = flat(f.table) @ weights

def _member_matrix(family: FunctionFamily) -> np.ndarray:
    return np.array([family.member(i).table.ravel() for i in range(len(family))])


def _joint_count_tensor(cols, m: int, block) -> np.ndarray:
    t = np.zeros((m,) * len(block))
    np.add.at(t, tuple(cols[s] for s in block), 1.0)
    return t


def _distinct_weight_tensor(cols, m: int, k: int) -> np.ndarray:
    """Weight tensor W with sum_{distinct indices} f = sum_x f(x) W(x)."""
    out = np.zeros((m,) * k)
    for blocks, mobius in _PARTITIONS[k]:
        operands = []
        for block in blocks:
            operands.extend([_joint_count_tensor(cols, m, block), list(block)])
        operands.append(list(range(k)))
        out += mobius * np.einsum(*operands)
    return out


def _offdiag_signed_tensor(nu: np.ndarray, k: int) -> np.ndarray:
    """prod_s nu(x_s) over pairwise-distinct point tuples, zero elsewhere."""
    m = nu.size
    out = nu.copy() if k == 1 else None
    if k == 1:
        return out
    idx = np.indices((m,) * k)
    w = np.ones((m,) * k)
    for axis in range(k):
        shape = [1] * k
        shape[axis] = m
        w = w * nu.reshape(shape)
    for a, b in itertools.combinations(range(k), 2):
        w[idx[a] == idx[b]] = 0.0
    return w


def statistic_weights(kind: str, draw: SampleDraw, space: ProbabilitySpace,
                      k: int) -> np.ndarray:
    """Flat weight vector so that the statistic of any arity-k kernel f is
    flat(f.table) @ weights."""
    m = space.m
    n = draw.n
    if kind == "J":
        nu = signed_increment(draw.base, space).weights
        w = _offdiag_signed_tensor(nu, k) * (n ** (k / 2) / factorial(k))
    elif kind == "I":
        cols = [draw.base.values] * k
        w = _distinct_weight_tensor(cols, m, k) / factorial(k)
    elif kind == "decoupled-I":
        cols = [draw.decoupled[s].values for s in range(k)]
        w = _distinct_weight_tensor(cols, m, k) / factorial(k)
    else:
        raise ValueError(f"unknown statistic kind {kind!r}")
    return w.ravel()


def _sup_block(args):
    (family, space, n, k, kind, seed, replicas) = args
    F = _member_matrix(family)
    out = np.empty(len(replicas))
    for i, r in enumerate(replicas):
        draw = draw_bundle(space, n, k, seed, replica=r)
        w = statistic_weights(kind, draw, space, k)
        out[i] = np.max(np.abs(F @ w))
    return out


def _run_blocks(fn, args_template, reps: int, workers: int) -> np.ndarray:
    blocks = np.array_split(np.arange(reps), max(1, min(workers, reps)))
    tasks = [args_template + (list(block),) for block in blocks if block.size]
    if workers <= 1:
        parts = [fn(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(fn, tasks))
    return np.concatenate(parts)


def mc_sup_tail(family: FunctionFamily, space: ProbabilitySpace, n: int, k: int,
                statistic_kind: str, x_grid, reps: int, seed: int,
                workers: int = 1) -> TailCurve:
    """Empirical exceedance curve of sup over the family of |statistic|."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if family.k != k:
        raise ValueError("family arity does not match k")
    maxima = _run_blocks(_sup_block, (family, space, n, k, statistic_kind, seed),
                         reps, workers)
    return TailCurve.from_maxima(maxima, x_grid)


# ---------------------------------------------------------------------------
# symmetrization (k = 1)

@dataclass(frozen=True)
class SymmetrizationResult:
    x: float
    lhs: float
    lhs_interval: tuple
    rhs: float
    rhs_interval: tuple
    replications: int


def _symmetrization_block(args):
    (F, space, n, seed, replicas) = args
    plain = np.empty(len(replicas))
    randomized = np.empty(len(replicas))
    for i, r in enumerate(replicas):
        draw = draw_bundle(space, n, 1, seed, replica=r)
        counts = point_counts(draw.base, space)
        signed_counts = np.zeros(space.m)
        np.add.at(signed_counts, draw.base.values, draw.signs)
        plain[i] = np.max(np.abs(F @ counts)) / sqrt(n)
        randomized[i] = np.max(np.abs(F @ signed_counts)) / sqrt(n)
    return np.stack([plain, randomized], axis=1)


def symmetrization_experiment(family: FunctionFamily, space: ProbabilitySpace,
                              n: int, x: float, reps: int, seed: int,
                              workers: int = 1) -> SymmetrizationResult:
    """Compare P(sup |n^{-1/2} sum f(xi_j)| >= x) with four times the tail of
    its sign-randomized version at x/3.

    Members are centered against the space first (the comparison concerns
    canonical families; uncentered members carry a deterministic drift that
    the sign-randomized side cannot see).
    """
    if family.k != 1:
        raise ValueError("symmetrization experiment needs a k=1 family")
    F = _member_matrix(family)
    F = F - (F @ space.weights)[:, None]
    both = _run_blocks(_symmetrization_block, (F, space, n, seed), reps, workers)
    lhs_hits = int(np.count_nonzero(both[:, 0] >= x))
    rhs_hits = int(np.count_nonzero(both[:, 1] >= x / 3.0))
    lhs = lhs_hits / reps
    rhs_p = rhs_hits / reps
    rlo, rhi = wilson_interval(rhs_hits, reps)
    return SymmetrizationResult(
        x=x,
        lhs=lhs,
        lhs_interval=wilson_interval(lhs_hits, reps),
        rhs=min(1.0, 4.0 * rhs_p),
        rhs_interval=(min(1.0, 4.0 * rlo), min(1.0, 4.0 * rhi)),
        replications=reps,
    )


# ---------------------------------------------------------------------------
# decoupling (k >= 2), report-only

@dataclass(frozen=True)
class DecouplingResult:
    coupled: TailCurve
    decoupled: TailCurve
    ratio: np.ndarray  # decoupled prob / coupled prob per grid point (nan-safe)


def _decoupling_block(args):
    (family, space, n, k, seed, replicas) = args
    F = _member_matrix(family)
    out = np.empty((len(replicas), 2))
    for i, r in enumerate(replicas):
        draw = draw_bundle(space, n, k, seed, replica=r)
        out[i, 0] = np.max(np.abs(F @ statistic_weights("I", draw, space, k)))
        out[i, 1] = np.max(np.abs(F @ statistic_weights("decoupled-I", draw, space, k)))
    return out


def decoupling_experiment(family: FunctionFamily, space: ProbabilitySpace,
                          n: int, k: int, x_grid, reps: int, seed: int,
                          workers: int = 1) -> DecouplingResult:
    """Paired tail curves of sup|I| and sup|decoupled I| on a shared grid.

    Report-only: the universal decoupling constants are not published, so no
    inequality is asserted here."""
    if k < 2:
        raise ValueError("decoupling is vacuous at k=1")
    both = _run_blocks(_decoupling_block, (family, space, n, k, seed), reps, workers)
    coupled = TailCurve.from_maxima(both[:, 0], x_grid)
    dec = TailCurve.from_maxima(both[:, 1], x_grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(coupled.probs > 0, dec.probs / coupled.probs, np.nan)
    return DecouplingResult(coupled=coupled, decoupled=dec, ratio=ratio)


# ---------------------------------------------------------------------------
# the small-x sharpness counterexample via the uniform empirical process

@dataclass(frozen=True)
class CounterexampleResult:
    sigma: float
    x_star: float
    x_low: float
    p_low: float
    x_high: float
    p_high: float
    replications: int
    grid: int


def _counterexample_block(args):
    (F, space, n, seed, replicas) = args
    out = np.empty(len(replicas))
    for i, r in enumerate(replicas):
        draw = draw_bundle(space, n, 1, seed, replica=r)
        nu = signed_increment(draw.base, space).weights
        out[i] = np.max(F @ nu) * sqrt(n)
    return out


def counterexample_experiment(sigma: float, n: int, epsilon: float, reps: int,
                              seed: int, grid: int | None = None,
                              workers: int = 1) -> CounterexampleResult:
    """Sup of the one-sided empirical increment over intervals of length at
    most sigma^2, evaluated just below and just above the threshold
    x* = sqrt(2 log(1/sigma)) * sigma.

    The sharpness signature at small sigma is p_low >> p_high."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if grid is None:
        grid = 2 * int(np.ceil(1.0 / sigma ** 2))
    family = interval_family(sigma, grid)
    space = interval_space(grid)
    if n * sigma ** 2 < 8:
        raise ValueError("n sigma^2 too small for non-degenerate increments")
    F = _member_matrix(family)
    sups = _run_blocks(_counterexample_block, (F, space, n, seed), reps, workers)
    x_star = sqrt(2.0 * log(1.0 / sigma)) * sigma
    x_low = (1 - epsilon) * x_star
    x_high = (1 + epsilon) * x_star
    return CounterexampleResult(
        sigma=sigma, x_star=x_star,
        x_low=x_low, p_low=float(np.mean(sups >= x_low)),
        x_high=x_high, p_high=float(np.mean(sups >= x_high)),
        replications=reps, grid=grid,
    )


# ---------------------------------------------------------------------------
# tail-exponent fitting

class TooFewQualifyingPoints(Exception):
    pass


def exponent_fit(curve: TailCurve):
    """Least-squares slope of log(-log p) against log x over grid points
    with p in (0.001, 0.5); the testable shadow of the exp(-alpha x^{2/k})
    tail shape.  Returns (slope, stderr)."""
    keep = (curve.probs > 0.001) & (curve.probs < 0.5) & (curve.x_grid > 0)
    if np.count_nonzero(keep) < 4:
        raise TooFewQualifyingPoints(
            f"only {np.count_nonzero(keep)} points with p in (0.001, 0.5)")
    lx = np.log(curve.x_grid[keep])
    ly = np.log(-np.log(curve.probs[keep]))
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    coef, res, _, _ = np.linalg.lstsq(A, ly, rcond=None)
    slope = coef[0]
    dof = lx.size - 2
    if dof > 0 and res.size:
        s2 = res[0] / dof
        stderr = sqrt(s2 / np.sum((lx - lx.mean()) ** 2))
    else:
        stderr = 0.0
    return float(slope), float(stderr)


# ---------------------------------------------------------------------------
# linkage: conditionally on the sample values, the sign-randomized decoupled
# statistic is a Rademacher chaos in the signs

def conditional_chaos_coefficients(f, draw: SampleDraw) -> ChaosCoefficients:
    """Chaos coefficients a(j_1..j_k) = f(xi_{j_1,1},..,xi_{j_k,k}) / k!
    over ordered distinct index tuples of a fixed draw."""
    k = f.k
    n = draw.n
    idx = []
    vals = []
    for tup in itertools.permutations(range(n), k):
        point = tuple(draw.decoupled[s].values[tup[s]] for s in range(k))
        idx.append(tup)
        vals.append(f.table[point] / factorial(k))
    return ChaosCoefficients(n=n, k=k,
                             index_tuples=np.array(idx, dtype=np.int64).reshape(-1, k),
                             values=np.array(vals))
