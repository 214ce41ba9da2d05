"""Box-counting dimension under a homogeneous distance, and low-degree sets."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .metric import HomogeneousDistance
from .submanifold import ImplicitSubmanifold, degree_map

log = logging.getLogger(__name__)

DEFAULT_SCALES = tuple(2.0**-j for j in range(3, 7))
MIN_POINTS = 1000


@dataclass
class CoverReport:
    scales: list
    counts: list
    dim_estimate: float
    running_slopes: list = field(default_factory=list)
    note: str = ""

    def rows(self):
        slopes = [float("nan")] + list(self.running_slopes)
        for s, c, sl in zip(self.scales, self.counts, slopes):
            yield {"scale": s, "count": c, "running_slope": sl}


def _vertical_reach(points, s, d: HomogeneousDistance):
    """Per-coordinate bound on ``|y_v - c_v|`` when ``rho(c, y) < s``.

    ``y_v - c_v = (x^-1 y)_v + [c, y - c] / 2`` and ``|y_h - c_h| < s``.
    """
    alg = d.algebra
    m1 = alg.m1
    C = alg.struct[:m1, :m1, m1:]
    ck = max((np.linalg.norm(C[:, :, k], 2) for k in range(alg.m2)), default=0.0)
    hmax = float(np.max(np.linalg.norm(points[:, :m1], axis=1))) if len(points) else 0.0
    return float(d.vertical_extent(s)) + 0.5 * ck * hmax * s


def greedy_cover(points, s, d: HomogeneousDistance):
    """Number of centres of a sequential greedy cover by open balls ``B(c, s)``.

    Points are visited in order; each point not yet covered becomes a centre
    and covers every sample point within ``s``. Candidates come from a KD-tree
    on coordinates rescaled so that every ball fits inside a unit cube.
    """
    points = np.asarray(points, dtype=float)
    n = len(points)
    if n == 0:
        return 0
    m1 = d.algebra.m1
    scale = np.ones(points.shape[1])
    scale[:m1] = 1.0 / s
    if d.algebra.m2:
        scale[m1:] = 1.0 / _vertical_reach(points, s, d)
    scaled = points * scale
    tree = cKDTree(scaled)
    covered = np.zeros(n, dtype=bool)
    centres = 0
    for i in range(n):
        if covered[i]:
            continue
        centres += 1
        cand = np.asarray(tree.query_ball_point(scaled[i], 1.0 + 1e-9, p=np.inf), dtype=int)
        cand = cand[~covered[cand]]
        hit = d.distance(points[i], points[cand]) < s
        covered[cand[hit]] = True
        covered[i] = True
    return centres


def box_dimension(points, scales=DEFAULT_SCALES, d: HomogeneousDistance = None, threads=1) -> CoverReport:
    """Slope of ``log N(s)`` against ``log(1/s)`` for greedy covers at each scale."""
    scales = sorted((float(s) for s in scales), reverse=True)
    if len(scales) < 4:
        raise ValueError("need at least 4 scales")
    X = np.atleast_2d(np.asarray(points, dtype=float))
    if d is None:
        raise ValueError("a HomogeneousDistance is required")
    if X.shape[1] != d.algebra.q:
        raise ValueError(f"points must have {d.algebra.q} coordinates")
    distinct = len(np.unique(X, axis=0))
    if distinct <= 1:
        return CoverReport(scales, [distinct] * len(scales), 0.0, [0.0] * (len(scales) - 1),
                           note="degenerate set: at most one distinct point")
    if len(X) < MIN_POINTS:
        raise ValueError(f"box counting needs at least {MIN_POINTS} points, got {len(X)}")

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            counts = list(pool.map(lambda s: greedy_cover(X, s, d), scales))
    else:
        counts = [greedy_cover(X, s, d) for s in scales]
    if any(a > b for a, b in zip(counts, counts[1:])):
        log.warning("cover counts are not monotone in the scale: %s", counts)
    lx = np.log(1.0 / np.array(scales))
    ly = np.log(np.array(counts, dtype=float))
    slope = float(np.polyfit(lx, ly, 1)[0])
    running = [float(v) for v in np.diff(ly) / np.diff(lx)]
    note = ""
    if counts[-1] > len(X) / 5:
        note = "undersampled: fewer than 5 points per ball at the finest scale"
        log.warning(note)
    return CoverReport(scales, [int(c) for c in counts], max(slope, 0.0), running, note)


class BoxCountingDimension(BaseEstimator):
    """Estimator wrapper: ``fit(X)`` sets ``dimension_``, ``counts_`` and ``report_``."""

    def __init__(self, distance=None, scales=DEFAULT_SCALES, threads=1):
        self.distance = distance
        self.scales = scales
        self.threads = threads

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_samples=1)
        self.report_ = box_dimension(X, self.scales, self.distance, self.threads)
        self.dimension_ = self.report_.dim_estimate
        self.counts_ = np.array(self.report_.counts)
        self.n_features_in_ = X.shape[1]
        return self

    def score(self, X=None, y=None):
        check_is_fitted(self)
        return self.dimension_


# ---------------------------------------------------------------------------
# low-degree sets

@dataclass
class LowDegreeSet:
    points: np.ndarray
    degrees: np.ndarray
    delta: float
    beyond_bound: bool
    sample_size: int

    def __len__(self):
        return len(self.points)


def low_degree_set(sigma: ImplicitSubmanifold, delta, grid) -> LowDegreeSet:
    """Sampled points of ``Sigma`` (``grid`` projected onto it) with degree ``<= delta``.

    ``beyond_bound`` is set when ``delta > Q - k``: then the finiteness
    statement for the low-degree set holds for every submanifold and says
    nothing specific about ``Sigma``.
    """
    dm = degree_map(sigma, grid)
    degrees = dm.degrees
    keep = degrees <= delta
    bound = sigma.algebra.homogeneous_dimension - sigma.k
    beyond = delta > bound
    if beyond:
        log.warning("delta=%g exceeds Q - k = %d; the low-degree bound is vacuous here", delta, bound)
    return LowDegreeSet(dm.points[keep], degrees[keep], float(delta), bool(beyond), len(dm.points))
