"""Finite probability spaces, seeded sampling and empirical measures.

All randomness in the library flows through counter-based Philox streams
keyed by (seed, stream_id), so every sample is reproducible bit-for-bit
and independent replicas can be generated in parallel.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class ProbabilitySpace:
    """Finite support points 0..m-1 with probability weights."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        w.setflags(write=False)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a nonempty 1-d array")
        if np.any(w < 0):
            raise ValueError("negative weight")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValueError("weights must sum to 1 within 1e-12")
        if np.count_nonzero(w) < 2:
            raise ValueError("need at least 2 points with positive weight")

    @property
    def m(self) -> int:
        return self.weights.size

    @property
    def min_atom(self) -> float:
        """Smallest positive weight; a discretization stand-in for non-atomicity."""
        pos = self.weights[self.weights > 0]
        return float(pos.min())

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.weights)


@dataclass(frozen=True)
class Sample:
    """n i.i.d. draws from a space, reproducible from (seed, stream_id)."""

    values: np.ndarray
    source_seed: int
    stream_id: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.int64)
        object.__setattr__(self, "values", v)
        v.setflags(write=False)

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class DiscreteMeasure:
    """Weights per point index; may be signed (e.g. the increment mu_n - mu)."""

    weights: np.ndarray = field()

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        w.setflags(write=False)


def finite_space(weights) -> ProbabilitySpace:
    """Normalize a nonnegative weight vector into a ProbabilitySpace."""
    w = np.asarray(weights, dtype=float)
    if w.size == 0:
        raise ValueError("empty weight vector")
    if np.any(w < 0):
        raise ValueError("negative weight")
    total = w.sum()
    if total <= 0:
        raise ValueError("all-zero weight vector")
    return ProbabilitySpace(w / total)


def uniform_space(m: int) -> ProbabilitySpace:
    return finite_space(np.ones(m))


def stream_rng(seed: int, stream_id: int) -> np.random.Generator:
    """Philox generator keyed by (seed, stream_id)."""
    key = np.array([seed, stream_id], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def draw_sample(space: ProbabilitySpace, n: int, seed: int, stream_id: int = 0) -> Sample:
    """n i.i.d. draws by inverse-CDF over the cumulative weights.

    Ties in the CDF are broken toward the lower index (searchsorted 'right'),
    so results do not depend on the platform's floating-point quirks.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    u = stream_rng(seed, stream_id).random(n)
    values = np.searchsorted(space.cumulative, u, side="right")
    # guard against u landing exactly on the final cumulative value
    np.clip(values, 0, space.m - 1, out=values)
    return Sample(values=values, source_seed=seed, stream_id=stream_id)


def point_counts(sample: Sample, space: ProbabilitySpace) -> np.ndarray:
    v = sample.values
    if v.size and (v.min() < 0 or v.max() >= space.m):
        raise ValueError("sample contains out-of-range point index")
    return np.bincount(v, minlength=space.m).astype(float)


def empirical_measure(sample: Sample, space: ProbabilitySpace) -> DiscreteMeasure:
    """mu_n: weight of point p is (count of p)/n."""
    return DiscreteMeasure(point_counts(sample, space) / sample.n)


def signed_increment(sample: Sample, space: ProbabilitySpace) -> DiscreteMeasure:
    """The un-normalized signed measure mu_n - mu (weights sum to 0)."""
    return DiscreteMeasure(point_counts(sample, space) / sample.n - space.weights)
