"""Coordinate projection operators and the Hoeffding decomposition.

P integrates one coordinate out against mu, its broadcast version keeps the
coordinate as a fictive argument, and Q = I - broadcast(P).  Applying Q on
the coordinates of a subset V and P on the rest yields the component f_V of
the Hoeffding decomposition; the components are canonical and sum back to f.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .kernels import KernelFunction, _check_shape
from .spaces import ProbabilitySpace

CANONICAL_TOL = 1e-10


def project_p(f: KernelFunction, coord: int, mu: ProbabilitySpace) -> KernelFunction | float:
    """Integrate coordinate `coord` (1-based) out against mu; arity drops by 1.

    For k = 1 the result is the scalar expectation.
    """
    _check_shape(f, mu)
    if not 1 <= coord <= f.k:
        raise ValueError(f"coord {coord} out of range for arity {f.k}")
    out = np.tensordot(f.table, mu.weights, axes=([coord - 1], [0]))
    if f.k == 1:
        return float(out)
    return KernelFunction(out)


def _p_bar(table: np.ndarray, axis: int, weights: np.ndarray) -> np.ndarray:
    proj = np.tensordot(table, weights, axes=([axis], [0]))
    return np.expand_dims(proj, axis)


def project_q(f: KernelFunction, coord: int, mu: ProbabilitySpace) -> KernelFunction:
    """f minus its coord-projection re-broadcast over coord; arity unchanged."""
    _check_shape(f, mu)
    if not 1 <= coord <= f.k:
        raise ValueError(f"coord {coord} out of range for arity {f.k}")
    return KernelFunction(f.table - _p_bar(f.table, coord - 1, mu.weights))


def is_canonical(f: KernelFunction, mu: ProbabilitySpace, tol: float = CANONICAL_TOL) -> bool:
    """True iff integrating any single coordinate against mu vanishes identically."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    _check_shape(f, mu)
    for axis in range(f.k):
        proj = np.tensordot(f.table, mu.weights, axes=([axis], [0]))
        if np.max(np.abs(proj)) > tol:
            return False
    return True


@dataclass(frozen=True)
class HoeffdingDecomposition:
    """Components f_V indexed by subsets V of {1..k}; f_emptyset is a scalar.

    Each component is stored at its natural arity |V| with coordinates in the
    sorted order of V.
    """

    k: int
    constant: float  # f_emptyset
    components: dict  # frozenset V (nonempty) -> KernelFunction of arity |V|
    base_space: ProbabilitySpace

    def component(self, V):
        V = frozenset(V)
        if not V:
            return self.constant
        return self.components[V]

    def lifted(self, V) -> np.ndarray:
        """Component broadcast back to a full arity-k table."""
        V = frozenset(V)
        m = self.base_space.m
        if not V:
            return np.full((m,) * self.k, self.constant)
        table = self.components[V].table
        shape = [m if (j + 1) in V else 1 for j in range(self.k)]
        return np.broadcast_to(table.reshape(shape), (m,) * self.k)

    def reconstruct(self) -> np.ndarray:
        out = np.zeros((self.base_space.m,) * self.k)
        for V in all_subsets(self.k):
            out = out + self.lifted(V)
        return out


def all_subsets(k: int):
    for r in range(k + 1):
        for V in itertools.combinations(range(1, k + 1), r):
            yield frozenset(V)


def canonicalize(f: KernelFunction, mu: ProbabilitySpace) -> KernelFunction:
    """Apply Q on every coordinate: the fully canonical part of f."""
    out = f
    for coord in range(1, f.k + 1):
        out = project_q(out, coord, mu)
    return KernelFunction(out.table, symmetric=f.symmetric)


def hoeffding_decompose(f: KernelFunction, mu: ProbabilitySpace) -> HoeffdingDecomposition:
    """Expand f through the product of (P_j + Q_j) over all coordinates.

    For each subset V: apply Q on the coordinates in V and integrate the
    others out.  The operators acting on distinct coordinates commute, so the
    order is immaterial; P's are applied first since they shrink the table.
    """
    _check_shape(f, mu)
    k = f.k
    w = mu.weights
    components = {}
    constant = 0.0
    for V in all_subsets(k):
        table = f.table
        # integrate out coordinates not in V, from the highest axis down
        for coord in range(k, 0, -1):
            if coord not in V:
                table = np.tensordot(table, w, axes=([coord - 1], [0]))
        if not V:
            constant = float(table)
            continue
        # remaining axes correspond to sorted(V); apply Q on each
        for axis in range(len(V)):
            table = table - _p_bar(table, axis, w)
        components[V] = KernelFunction(table)
    return HoeffdingDecomposition(k=k, constant=constant, components=components,
                                  base_space=mu)
