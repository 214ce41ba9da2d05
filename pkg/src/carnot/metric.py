"""Homogeneous gauges, distances, calibration and ball sampling."""
from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .group import GradedAlgebra, GroupPoint

KINDS = ("gauge_max", "gauge_sum")


class CalibrationError(RuntimeError):
    pass


class SamplingError(RuntimeError):
    pass


def normalize_kind(kind):
    k = str(kind).replace("-", "_")
    if k not in KINDS:
        raise ValueError(f"unknown distance kind {kind!r}; expected gauge-max or gauge-sum")
    return k


@dataclass(frozen=True)
class HomogeneousDistance:
    """``rho(x, y) = N(x^-1 y)`` for the gauge

    * ``gauge_max``: ``max(|x1|, eps * |x2|**0.5)``
    * ``gauge_sum``: ``|x1| + eps * |x2|**0.5``

    where ``x1, x2`` are the V1 and V2 blocks and ``|.|`` is Euclidean.
    """

    algebra: GradedAlgebra
    epsilon: float = 1.0
    kind: str = "gauge_max"

    def __post_init__(self):
        object.__setattr__(self, "kind", normalize_kind(self.kind))
        if not self.epsilon > 0:
            raise ValueError("layer weight epsilon must be positive")

    def norm(self, x):
        x = np.asarray(x, dtype=float)
        m1 = self.algebra.m1
        h = np.sqrt(np.einsum("...i,...i->...", x[..., :m1], x[..., :m1]))
        if self.algebra.m2 == 0:
            return h
        v = self.epsilon * np.sqrt(np.sqrt(np.einsum("...i,...i->...", x[..., m1:], x[..., m1:])))
        if self.kind == "gauge_max":
            return np.maximum(h, v)
        return h + v

    def distance(self, x, y):
        """Batched ``rho(x, y)``; broadcasts over leading axes."""
        return self.norm(self.algebra.multiply(-np.asarray(x, dtype=float), y))

    def vertical_extent(self, r):
        """Bound on ``|x2|`` (each V2 coordinate) inside the ball of radius ``r``."""
        return (np.asarray(r, dtype=float) / self.epsilon) ** 2

    def with_epsilon(self, eps):
        return replace(self, epsilon=float(eps))


def norm(x: GroupPoint, d: HomogeneousDistance) -> float:
    return float(d.norm(x.coords))


def distance(x: GroupPoint, y: GroupPoint, d: HomogeneousDistance) -> float:
    if x.algebra is not y.algebra or x.algebra is not d.algebra:
        raise ValueError("points and distance must share one group")
    return float(d.distance(x.coords, y.coords))


# ---------------------------------------------------------------------------
# calibration

@dataclass(frozen=True)
class CalibrationReport:
    epsilon: float
    kind: str
    group: str
    samples: int
    seed: int
    worst_slack: float
    stratified: bool

    def to_json(self):
        return json.dumps(self.__dict__, sort_keys=True, indent=2)


def random_points(algebra, n, rng):
    """Points with coordinates in [-1, 1] dilated by log-uniform factors in [1e-2, 1e2].

    Mixing scales matters: the triangle inequality is most fragile when one
    point is nearly horizontal and the other nearly vertical.
    """
    pts = rng.uniform(-1.0, 1.0, size=(n, algebra.q))
    scale = 10.0 ** rng.uniform(-2.0, 2.0, size=n)
    return algebra.dilate(scale, pts)


def triangle_slack(d, x, y, z):
    """``rho(x,y) + rho(y,z) - rho(x,z)`` elementwise."""
    return d.distance(x, y) + d.distance(y, z) - d.distance(x, z)


def _worst_slack(d, triples):
    return float(np.min(triangle_slack(d, *triples)))


def calibrate(d: HomogeneousDistance, samples: int = 10_000, seed: int = 0,
              tol: float = 1e-12, iterations: int = 40):
    """Largest ``epsilon`` in (0, 1] for which every sampled triple obeys the
    triangle inequality up to slack ``-tol``.

    Bisects between an infeasible upper and a feasible lower endpoint.
    Returns ``(calibrated distance, report)``.
    """
    if samples < 10_000:
        raise ValueError("calibration needs at least 1e4 samples")
    rng = np.random.default_rng(seed)
    alg = d.algebra
    triples = tuple(random_points(alg, samples, rng) for _ in range(3))

    def worst(eps):
        return _worst_slack(d.with_epsilon(eps), triples)

    report = dict(kind=d.kind, group=alg.name, samples=samples, seed=seed,
                  stratified=bool(alg.is_stratified))
    w = worst(1.0)
    if w >= -tol:
        return d.with_epsilon(1.0), CalibrationReport(epsilon=1.0, worst_slack=w, **report)
    lo = 2.0**-20
    if worst(lo) < -tol:
        raise CalibrationError(f"no feasible epsilon in (0, 1] for {d.kind} on {alg.name}")
    hi = 1.0
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if worst(mid) >= -tol:
            lo = mid
        else:
            hi = mid
    return d.with_epsilon(lo), CalibrationReport(epsilon=lo, worst_slack=worst(lo), **report)


def quasi_triangle_constant(d, n=100_000, seed=0):
    """max over sampled triples of rho(x,z) / (rho(x,y) + rho(y,z))."""
    rng = np.random.default_rng(seed)
    x, y, z = (random_points(d.algebra, n, rng) for _ in range(3))
    return float(np.max(d.distance(x, z) / (d.distance(x, y) + d.distance(y, z))))


# ---------------------------------------------------------------------------
# sampling

def ball_box(d: HomogeneousDistance, r):
    """Half-widths of a coordinate box containing the ball of radius ``r`` at the identity."""
    alg = d.algebra
    return np.array([r] * alg.m1 + [float(d.vertical_extent(r))] * alg.m2)


def sample_ball(center, r, d: HomogeneousDistance, n: int, seed=0,
                batch: int = 65536, min_efficiency: float = 1e-4):
    """``n`` points of the open ball ``B(center, r)`` by rejection sampling.

    Candidates are drawn uniformly from the box :func:`ball_box` and left
    translated by ``center``. Deterministic given ``seed``.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    center = np.asarray(getattr(center, "coords", center), dtype=float)
    q = d.algebra.q
    if n <= 0:
        return np.zeros((0, q))
    rng = np.random.default_rng(seed)
    half = ball_box(d, r)
    accepted = []
    count = drawn = 0
    while count < n:
        z = rng.uniform(-1.0, 1.0, size=(batch, q)) * half
        keep = z[d.norm(z) < r]
        accepted.append(keep)
        count += len(keep)
        drawn += batch
        if drawn >= 10 * batch and count / drawn < min_efficiency:
            raise SamplingError(f"rejection efficiency {count / drawn:.2e} below {min_efficiency}")
    z = np.concatenate(accepted)[:n]
    return d.algebra.multiply(center, z)
