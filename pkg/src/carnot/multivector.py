"""Sparse p-vectors over a graded basis and their degrees."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

ZERO_TOL = 1e-12


class DegreeError(ValueError):
    """Degree of the zero p-vector is undefined."""


@dataclass(frozen=True)
class PVector:
    """``sum_J tau_J W_J`` with ``J`` strictly increasing 0-based index tuples."""

    weights: tuple
    p: int
    components: dict

    def __post_init__(self):
        q = len(self.weights)
        clean = {}
        for J, c in self.components.items():
            J = tuple(int(j) for j in J)
            if len(J) != self.p or any(a >= b for a, b in zip(J, J[1:])):
                raise ValueError(f"index tuple {J} is not strictly increasing of length {self.p}")
            if J and not (0 <= J[0] and J[-1] < q):
                raise ValueError(f"index tuple {J} outside 0..{q - 1}")
            if c != 0:
                clean[J] = float(c)
        object.__setattr__(self, "weights", tuple(int(w) for w in self.weights))
        object.__setattr__(self, "components", clean)

    @property
    def q(self):
        return len(self.weights)

    def weight(self, J):
        return sum(self.weights[j] for j in J)

    @property
    def is_zero(self):
        return not self.components

    def degree(self):
        if self.is_zero:
            raise DegreeError("the zero p-vector has no degree")
        return max(self.weight(J) for J in self.components)

    def project(self, r):
        return PVector(self.weights, self.p,
                       {J: c for J, c in self.components.items() if self.weight(J) == r})

    def __add__(self, other):
        if other.weights != self.weights or other.p != self.p:
            raise ValueError("p-vectors of different shapes")
        out = dict(self.components)
        for J, c in other.components.items():
            out[J] = out.get(J, 0.0) + c
        return PVector(self.weights, self.p, out)

    def __mul__(self, s):
        return PVector(self.weights, self.p, {J: s * c for J, c in self.components.items()})

    __rmul__ = __mul__

    def norm(self):
        return float(np.sqrt(sum(c * c for c in self.components.values())))


def basis_pvector(weights, J):
    return PVector(tuple(weights), len(J), {tuple(sorted(J)): 1.0})


def wedge(vectors, weights, tol=ZERO_TOL):
    """Wedge of the given coordinate vectors; components are the p x p minors.

    Components with ``|tau_J| <= tol`` are dropped.
    """
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    q = len(weights)
    if V.shape[1] != q:
        raise ValueError(f"vectors must have length {q}, got {V.shape[1]}")
    p = V.shape[0]
    if not 1 <= p <= q:
        raise ValueError(f"need 1 <= p <= {q} vectors, got {p}")
    comps = {}
    for J in combinations(range(q), p):
        c = float(np.linalg.det(V[:, J]))
        if abs(c) > tol:
            comps[J] = c
    return PVector(tuple(weights), p, comps)


def degree(tau: PVector) -> int:
    return tau.degree()


def project_degree(tau: PVector, r: int) -> PVector:
    return tau.project(r)


def max_degree_bound(weights, p):
    """Sum of the ``p`` largest weights."""
    return int(sum(sorted(weights, reverse=True)[:p]))
