"""Surface measure of ``Sigma`` near a point, scaling exponents and density ratios.

The auxiliary Riemannian metric is the Euclidean metric of graded
coordinates. Balls are homogeneous balls of a :class:`HomogeneousDistance`.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_consistent_length, check_is_fitted

from .blowup import BlowupVariety, ImplicitGraph, adapted_frame, blowup_variety
from .metric import HomogeneousDistance
from .submanifold import pointwise_degree

log = logging.getLogger(__name__)

DEFAULT_LADDER = tuple(10.0 ** -e for e in (1.0, 1.375, 1.75, 2.125, 2.5))
CHUNK = 1 << 17


class MeasureError(RuntimeError):
    pass


@dataclass(frozen=True)
class MeasureEstimate:
    value: float
    std_error: float
    n_samples: int
    method: str
    seed: object
    r: float = float("nan")
    hits: int = 0


def rung_rng(seed, rung):
    """Independent stream for ladder rung ``rung`` derived from the master seed."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(rung,)))


class _Local:
    """Graph parametrization of ``Sigma`` near ``x`` shared by all rungs."""

    def __init__(self, sigma, x, d: HomogeneousDistance):
        self.sigma = sigma
        self.d = d
        self.frame = adapted_frame(sigma, x)
        self.graph = ImplicitGraph(self.frame)
        self.A = self.frame.coordinate_matrix
        self.B = self.frame.basis
        self.weights = self.frame.free_weights

    def box(self, r):
        return np.where(self.weights == 1, r, self.d.vertical_extent(r))

    def area_element(self, y):
        """``sqrt(det(DPhi^T DPhi))`` of ``Phi = x . F(B psi)`` at adapted points ``y``."""
        dphi = self.A @ self.graph.derivative(y)
        gram = np.swapaxes(dphi, -1, -2) @ dphi
        return np.sqrt(np.maximum(np.linalg.det(gram), 0.0))

    def integrand(self, xi, r, region=None):
        """Area element times the indicator of the ball (and ``region``)."""
        y = self.graph.evaluate(xi)
        z = y @ self.B.T  # x^-1 . Phi(xi) in graded coordinates
        inside = self.d.norm(z) < r
        if region is not None:
            inside &= np.asarray(region(self.frame.point + y @ self.A.T), dtype=bool)
        out = np.zeros(len(xi))
        if inside.any():
            out[inside] = self.area_element(y[inside])
        return out, self.d.norm(z) < r


def surface_measure(sigma, x, r, d: HomogeneousDistance, n=100_000, seed=0, method="montecarlo",
                    region=None, _local=None, _rng=None) -> MeasureEstimate:
    """Riemannian area of ``Sigma`` inside ``B(x, r)`` (optionally also inside ``region``).

    ``method="montecarlo"`` draws ``n`` uniform parameters in the box that
    contains the pulled-back ball; ``method="quadrature"`` uses a midpoint
    tensor grid (``p <= 3``) and estimates its error from the grid of half
    the resolution.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    local = _local or _Local(sigma, x, d)
    half = local.box(r)
    volume = float(np.prod(2 * half))
    p = len(half)
    if method in ("montecarlo", "graph_montecarlo"):
        rng = _rng or np.random.default_rng(seed)
        total = total_sq = 0.0
        hits = 0
        done = 0
        while done < n:
            m = min(CHUNK, n - done)
            xi = rng.uniform(-1.0, 1.0, size=(m, p)) * half
            g, ball = local.integrand(xi, r, region)
            total += g.sum()
            total_sq += (g * g).sum()
            hits += int(ball.sum())
            done += m
        if hits == 0:
            raise MeasureError(f"no sample hit the ball of radius {r:g}; enlarge n")
        mean = total / n
        var = max(total_sq / n - mean * mean, 0.0)
        return MeasureEstimate(float(volume * mean), float(volume * np.sqrt(var / n)), n, "graph_montecarlo",
                               seed, r, hits)
    if method in ("quadrature", "graph_quadrature"):
        if p > 3:
            raise ValueError("tensor-grid quadrature supports p <= 3")
        per_axis = max(2, int(round(n ** (1.0 / p))))

        def grid_value(k, shift=0.5):
            axes = [(np.arange(k) + shift) / k * 2 * h - h for h in half]
            pts = np.array(list(product(*axes)))
            vals, ball = [], 0
            for s in range(0, len(pts), CHUNK):
                g, b = local.integrand(pts[s : s + CHUNK], r, region)
                vals.append(g)
                ball += int(b.sum())
            return volume * np.concatenate(vals).mean(), ball

        fine, hits = grid_value(per_axis)
        if hits == 0:
            raise MeasureError(f"no grid node inside the ball of radius {r:g}; refine the grid")
        coarse, _ = grid_value(max(1, per_axis // 2))
        # the ball indicator is discontinuous, so also probe a grid shifted by a quarter cell
        shifted, _ = grid_value(per_axis, 0.75)
        err = max(abs(fine - coarse), abs(fine - shifted))
        return MeasureEstimate(float(fine), float(err), per_axis**p, "graph_quadrature", seed, r, hits)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# log-log fit

class ScalingExponentRegressor(RegressorMixin, BaseEstimator):
    """Least-squares fit of ``log(measure) = slope * log(r) + intercept``.

    ``fit(X, y)`` takes radii as a single feature column and positive
    measures as targets; ``predict`` returns ``exp(intercept) * r**slope``.
    """

    def __init__(self, weighted=False):
        self.weighted = weighted

    def fit(self, X, y, sample_weight=None):
        X = check_array(X, ensure_min_samples=2)
        y = np.asarray(y, dtype=float)
        check_consistent_length(X, y)
        if X.shape[1] != 1:
            raise ValueError("expected a single column of radii")
        if np.any(X <= 0) or np.any(y <= 0):
            raise ValueError("radii and measures must be positive")
        lx, ly = np.log(X[:, 0]), np.log(y)
        w = None
        if self.weighted and sample_weight is not None:
            w = np.sqrt(np.asarray(sample_weight, dtype=float))
        self.slope_, self.intercept_ = np.polyfit(lx, ly, 1, w=w)
        resid = ly - (self.slope_ * lx + self.intercept_)
        ss_tot = np.sum((ly - ly.mean()) ** 2)
        self.r_squared_ = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self)
        X = check_array(X)
        return np.exp(self.intercept_) * X[:, 0] ** self.slope_


@dataclass
class ScalingFit:
    radii: list
    measures: list
    degree: int
    slope: float
    intercept: float
    r_squared: float
    ratio_band: tuple
    ratios: list = field(default_factory=list)
    violation: bool = False

    def rows(self):
        for r, m, ratio in zip(self.radii, self.measures, self.ratios):
            yield {"r": r, "measure": m.value, "std_error": m.std_error, "ratio": ratio,
                   "degree": self.degree, "slope": self.slope, "r2": self.r_squared}


def _ladder(radii):
    radii = [float(r) for r in radii]
    if len(radii) < 2:
        raise ValueError("need at least two radii")
    if any(a <= b for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    return radii


def ladder_measures(sigma, x, radii, d, n=1_000_000, seed=0, method="montecarlo", threads=1,
                    region=None, local=None):
    local = local or _Local(sigma, x, d)

    def one(i):
        r = radii[i]
        return surface_measure(sigma, x, r, d, n=n, seed=(seed, i), method=method, region=region,
                               _local=local, _rng=rung_rng(seed, i))

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, range(len(radii))))
    return [one(i) for i in range(len(radii))]


def scaling_fit(sigma, x, radii=DEFAULT_LADDER, d: HomogeneousDistance = None, n=1_000_000, seed=0,
                method="montecarlo", threads=1) -> ScalingFit:
    """Measure ``Sigma`` in balls ``B(x, r)`` along ``radii`` and fit the exponent.

    The ratio band is ``[min, max]`` of ``measure / r**d`` with ``d`` the
    pointwise degree at ``x``. ``violation`` is set when the band touches 0
    or the ratios drift monotonically by more than a factor 10.
    """
    radii = _ladder(radii)
    if d is None:
        d = HomogeneousDistance(sigma.algebra)
    deg = pointwise_degree(sigma, x).degree
    measures = ladder_measures(sigma, x, radii, d, n=n, seed=seed, method=method, threads=threads)
    values = np.array([m.value for m in measures])
    if np.any(values <= 0):
        raise MeasureError("a rung has zero measure; the ladder leaves the graph domain")
    reg = ScalingExponentRegressor().fit(np.array(radii)[:, None], values)
    ratios = values / np.array(radii) ** deg
    band = (float(ratios.min()), float(ratios.max()))
    steps = np.diff(ratios)
    monotone = bool(np.all(steps > 0) or np.all(steps < 0))
    violation = band[0] <= 0 or (monotone and band[1] / band[0] > 10)
    if violation:
        log.warning("ratio band %s violates the two-sided estimate at degree %d", band, deg)
    return ScalingFit(radii, measures, deg, float(reg.slope_), float(reg.intercept_),
                      float(reg.r_squared_), band, [float(v) for v in ratios], violation)


# ---------------------------------------------------------------------------
# density limit

@dataclass
class DensityLimit:
    radii: list
    ratios: list
    ratio_errors: list
    degree: int
    blowup_measure: float
    blowup_std_error: float
    stabilized: bool
    gap: float

    @property
    def limit_estimate(self):
        return self.ratios[-1]


def frozen_area_element(variety: BlowupVariety):
    """``|dPhi/dxi(0)|``: the area element of the parametrization at the base point."""
    fr = variety.frame
    graph = variety.graph
    dpsi = graph._dpsi(graph.first)
    dphi = fr.coordinate_matrix @ dpsi
    return float(np.sqrt(np.linalg.det(dphi.T @ dphi)))


def blowup_measure(variety: BlowupVariety, d: HomogeneousDistance, n=1_000_000, seed=0, rng=None):
    """Limit density ``|dPhi(0)| * Leb{eta : B T(eta) in B_1}`` by Monte Carlo.

    This is the measure of ``A cap B_1`` carried by the parametrization of
    ``Sigma`` frozen at the base point, the quantity that the rescaled ratios
    ``mu(Sigma cap B(x, r)) / r**d`` converge to.
    """
    fr = variety.frame
    rng = rng or np.random.default_rng(seed)
    half = np.where(fr.free_weights == 1, 1.0, d.vertical_extent(1.0))
    volume = float(np.prod(2 * half))
    hits = done = 0
    while done < n:
        m = min(CHUNK, n - done)
        eta = rng.uniform(-1, 1, size=(m, fr.p)) * half
        hits += int(np.sum(d.norm(variety.sample(eta)) < 1.0))
        done += m
    frac = hits / n
    scale = frozen_area_element(variety) * volume
    return float(scale * frac), float(scale * np.sqrt(frac * (1 - frac) / n))


def density_limit(sigma, x, radii=DEFAULT_LADDER, d: HomogeneousDistance = None, n=1_000_000, seed=0,
                  method="montecarlo", threads=1) -> DensityLimit:
    """Ratios ``mu(Sigma cap B(x, r)) / r**d`` along the ladder against the blow-up measure."""
    radii = _ladder(radii)
    if d is None:
        d = HomogeneousDistance(sigma.algebra)
    variety = blowup_variety(sigma, x)
    deg = variety.degree
    measures = ladder_measures(sigma, x, radii, d, n=n, seed=seed, method=method, threads=threads)
    ratios = [float(m.value / r**deg) for m, r in zip(measures, radii)]
    errors = [float(m.std_error / r**deg) for m, r in zip(measures, radii)]
    bm, bse = blowup_measure(variety, d, n=n, rng=rung_rng(seed, len(radii)))
    combined = np.hypot(errors[-1], errors[-2])
    stabilized = abs(ratios[-1] - ratios[-2]) <= 3 * combined + 1e-12 * abs(ratios[-1])
    if not stabilized:
        log.warning("density ratios have not stabilized: %s", ratios[-2:])
    return DensityLimit(radii, ratios, errors, deg, bm, bse, bool(stabilized), float(ratios[-1] - bm))
