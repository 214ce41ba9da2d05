"""Implicit polynomial submanifolds and their pointwise degree."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .group import GradedAlgebra
from .multivector import wedge
from .polynomial import CompiledMap, Polynomial, parse_polynomial

log = logging.getLogger(__name__)

RANK_TOL = 1e-9
ON_MANIFOLD_TOL = 1e-9


class SubmanifoldError(ValueError):
    pass


class OffManifoldError(SubmanifoldError):
    pass


class RankDeficiencyError(SubmanifoldError):
    pass


class DegreeConsistencyError(RuntimeError):
    """The three degree computations disagree; ``diagnostics`` holds the data."""

    def __init__(self, message, diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


def numerical_rank(M, ref=None, tol=RANK_TOL):
    s = np.linalg.svd(np.atleast_2d(M), compute_uv=False)
    if ref is None:
        ref = s[0] if s.size else 0.0
    if ref == 0:
        return 0
    return int(np.sum(s > tol * ref))


class ImplicitSubmanifold:
    """The level set ``f^-1(0)`` of a polynomial map ``f: R^q -> R^k``.

    Value, Jacobian and Hessians come from exact symbolic derivatives of the
    stored polynomials.
    """

    def __init__(self, algebra: GradedAlgebra, polys: Sequence[Polynomial], name="custom",
                 rank_tol=RANK_TOL):
        polys = list(polys)
        if not polys:
            raise SubmanifoldError("codimension must be at least 1")
        for f in polys:
            if f.nvars != algebra.q:
                raise SubmanifoldError(f"polynomial has {f.nvars} variables, group has {algebra.q}")
        if len(polys) >= algebra.q:
            raise SubmanifoldError("codimension must be smaller than the group dimension")
        self.algebra = algebra
        self.polys = tuple(polys)
        self.name = name
        self.rank_tol = rank_tol
        q = algebra.q
        self.k = len(polys)
        self.p = q - self.k
        grads = [f.diff(i) for f in polys for i in range(q)]
        hess = [g.diff(j) for g in grads for j in range(q)]
        self._value = CompiledMap(polys)
        self._jac = CompiledMap(grads)
        self._hess = CompiledMap(hess)
        self.gradient_polys = tuple(grads)
        self.hessian_polys = tuple(hess)

    @classmethod
    def from_strings(cls, algebra, exprs, name="custom", **kw):
        if isinstance(exprs, str):
            exprs = [exprs]
        return cls(algebra, [parse_polynomial(e, algebra.q) for e in exprs], name=name, **kw)

    def __repr__(self):
        return f"ImplicitSubmanifold({self.name!r}, k={self.k}, p={self.p}, group={self.algebra.name!r})"

    # oracles -----------------------------------------------------------
    def value(self, x):
        return self._value(x)

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        return self._jac(x).reshape(x.shape[:-1] + (self.k, self.algebra.q))

    def hessian(self, x):
        x = np.asarray(x, dtype=float)
        q = self.algebra.q
        return self._hess(x).reshape(x.shape[:-1] + (self.k, q, q))

    def frame_jacobian(self, x):
        """``Y_j f^i(x)``: the Jacobian composed with the left-invariant frame."""
        x = np.asarray(x, dtype=float)
        return self.jacobian(x) @ self.algebra.left_frame(x)

    # transformations ---------------------------------------------------
    def _compose_affine(self, shift, matrix, name):
        q = self.algebra.q
        subs = []
        for i in range(q):
            coeffs = {}
            if shift[i] != 0:
                coeffs[(0,) * q] = float(shift[i])
            for j in range(q):
                if matrix[i, j] != 0:
                    e = [0] * q
                    e[j] = 1
                    coeffs[tuple(e)] = _exactish(matrix[i, j])
            subs.append(Polynomial(q, coeffs))
        return ImplicitSubmanifold(self.algebra, [f.compose(subs) for f in self.polys],
                                   name=name, rank_tol=self.rank_tol)

    def left_translate(self, u):
        """``u . Sigma`` defined by ``z -> f(u^-1 z)``."""
        u = np.asarray(u, dtype=float)
        alg = self.algebra
        matrix = np.eye(alg.q) - 0.5 * alg.ad(u)
        return self._compose_affine(-u, matrix, f"{self.name}@translated")

    def dilated(self, r):
        """``delta_r Sigma`` defined by ``z -> f(delta_{1/r} z)``."""
        if r <= 0:
            raise ValueError("dilation factor must be positive")
        matrix = np.diag((1.0 / r) ** self.algebra.weights.astype(float))
        return self._compose_affine(np.zeros(self.algebra.q), matrix, f"{self.name}@dilated")

    # points ------------------------------------------------------------
    def check_point(self, x, tol=ON_MANIFOLD_TOL):
        x = np.asarray(getattr(x, "coords", x), dtype=float)
        if x.shape != (self.algebra.q,):
            raise SubmanifoldError(f"point must have {self.algebra.q} coordinates")
        res = np.max(np.abs(self.value(x)))
        if res > tol:
            raise OffManifoldError(f"|f(x)| = {res:.3e} exceeds {tol:.0e}; point is not on the level set")
        J = self.jacobian(x)
        if numerical_rank(J, tol=self.rank_tol) < self.k:
            raise RankDeficiencyError(f"df(x) is not surjective at {x.tolist()}")
        return x

    def project(self, points, tol=1e-12, max_iter=50):
        """Gauss-Newton projection onto ``f = 0`` (minimum-norm steps).

        Returns ``(projected points, converged mask)``.
        """
        X = np.array(points, dtype=float, copy=True).reshape(-1, self.algebra.q)
        ok = np.zeros(len(X), dtype=bool)
        active = np.arange(len(X))
        for _ in range(max_iter):
            if active.size == 0:
                break
            F = self.value(X[active])
            done = np.max(np.abs(F), axis=1) <= tol
            ok[active[done]] = True
            active = active[~done]
            F = F[~done]
            if active.size == 0:
                break
            J = self.jacobian(X[active])
            JJt = J @ np.swapaxes(J, -1, -2)
            good = np.abs(np.linalg.det(JJt)) > 1e-300
            step = np.zeros_like(X[active])
            if np.any(good):
                lam = np.linalg.solve(JJt[good], F[good][..., None])
                step[good] = (np.swapaxes(J[good], -1, -2) @ lam)[..., 0]
            X[active[good]] -= step[good]
            active = active[good]
        if active.size:
            F = self.value(X[active])
            ok[active[np.max(np.abs(F), axis=1) <= tol]] = True
        return X, ok

    def tangent_basis(self, x):
        """Orthonormal basis (columns) of ``ker df(x)`` in coordinates."""
        x = self.check_point(x)
        J = self.jacobian(x)
        _, _, vt = np.linalg.svd(J)
        return vt[self.k :].T

    def pointwise_degree(self, x):
        return pointwise_degree(self, x)

    def classify_point(self, x):
        return classify_point(self, x)


def _exactish(v):
    f = Fraction(float(v)).limit_denominator(10**6)
    return f if float(f) == float(v) else float(v)


# ---------------------------------------------------------------------------
# degree

@dataclass(frozen=True)
class DegreeReport:
    point: tuple
    h: int
    flag_dims: tuple
    degree: int
    gromov_degree: int
    tangent_pvector_degree: int
    classification: str

    def as_dict(self):
        return {
            "point": list(self.point),
            "h": self.h,
            "flag_dims": list(self.flag_dims),
            "degree": self.degree,
            "gromov_degree": self.gromov_degree,
            "tangent_pvector_degree": self.tangent_pvector_degree,
            "classification": self.classification,
        }


def tangent_basis(sigma: ImplicitSubmanifold, x):
    return sigma.tangent_basis(x)


def _horizontal_rank(sigma, x):
    JL = sigma.frame_jacobian(x)
    ref = np.linalg.svd(JL, compute_uv=False)[0]
    return numerical_rank(JL[:, : sigma.algebra.m1], ref=ref, tol=sigma.rank_tol)


def classify_point(sigma: ImplicitSubmanifold, x) -> str:
    """``non-horizontal`` if ``df(x)`` restricted to ``H_x`` is onto, else
    ``characteristic`` (codimension one) or ``horizontal``."""
    x = sigma.check_point(x)
    if _horizontal_rank(sigma, x) == sigma.k:
        return "non-horizontal"
    return "characteristic" if sigma.k == 1 else "horizontal"


def _flag_dims(sigma, x, T):
    """Dimensions of ``T_x Sigma`` intersected with the flag ``H^1_x in H^2_x``."""
    alg = sigma.algebra
    L = alg.left_frame(x)
    dims = []
    for layer in (1, 2):
        cols = L[:, alg.weights <= layer]
        stacked = np.hstack([T, cols / np.linalg.norm(cols, axis=0)])
        dims.append(T.shape[1] + cols.shape[1] - numerical_rank(stacked, tol=sigma.rank_tol))
    return dims[0], dims[1] - dims[0]


def pointwise_degree(sigma: ImplicitSubmanifold, x) -> DegreeReport:
    """Degree of ``Sigma`` at ``x`` by three independent computations:

    (a) ``2p - h`` with ``h`` the kernel dimension of ``df(x)`` on ``H_x``,
    (b) the flag sum ``1 * m'_1 + 2 * m'_2`` from subspace intersections,
    (c) the degree of the tangent p-vector written in the left-invariant frame.
    """
    x = sigma.check_point(x)
    alg = sigma.algebra
    p = sigma.p
    h = alg.m1 - _horizontal_rank(sigma, x)
    deg_a = 2 * p - h

    T = sigma.tangent_basis(x)
    m1p, m2p = _flag_dims(sigma, x, T)
    deg_b = 1 * m1p + 2 * m2p

    in_frame = np.linalg.solve(alg.left_frame(x), T)
    tau = wedge(in_frame.T, tuple(alg.weights), tol=0.0)
    scale = max(abs(c) for c in tau.components.values())
    tau = wedge(in_frame.T, tuple(alg.weights), tol=sigma.rank_tol * scale)
    deg_c = tau.degree()

    cls = "non-horizontal" if alg.m1 - h == sigma.k else ("characteristic" if sigma.k == 1 else "horizontal")
    report = DegreeReport(tuple(float(v) for v in x), h, (m1p, m2p), deg_a, deg_b, deg_c, cls)
    if not deg_a == deg_b == deg_c:
        raise DegreeConsistencyError(
            f"degree routes disagree at {x.tolist()}: 2p-h={deg_a}, flag={deg_b}, p-vector={deg_c}",
            {"report": report.as_dict(), "tangent_basis": T.tolist(),
             "frame_jacobian": sigma.frame_jacobian(x).tolist()},
        )
    return report


# ---------------------------------------------------------------------------
# degree over samples

@dataclass
class DegreeMap:
    points: np.ndarray
    reports: list
    max_degree: int
    failed: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    semicontinuity_violations: list = field(default_factory=list)

    @property
    def degrees(self):
        return np.array([r.degree for r in self.reports], dtype=int)


def degree_map(sigma: ImplicitSubmanifold, grid, neighbors=6) -> DegreeMap:
    """Project ``grid`` onto ``Sigma`` and report the degree at every point.

    The semicontinuity audit lists pairs ``(i, j)`` where ``j`` is among the
    nearest sampled neighbours of ``i`` and has lower degree. At finite
    resolution such pairs appear next to lower-degree sets; they are logged.
    """
    from scipy.spatial import cKDTree

    X, ok = sigma.project(grid)
    failed = np.flatnonzero(~ok)
    if failed.size:
        log.warning("%d of %d grid points failed to project onto %s", failed.size, len(X), sigma.name)
    pts, reports = [], []
    for x in X[ok]:
        try:
            reports.append(pointwise_degree(sigma, x))
            pts.append(x)
        except RankDeficiencyError:
            log.warning("skipping singular point %s", x.tolist())
    pts = np.array(pts).reshape(-1, sigma.algebra.q)
    if not reports:
        raise SubmanifoldError("no grid point could be projected onto the submanifold")
    degrees = np.array([r.degree for r in reports])
    violations = []
    if len(pts) > 1:
        kk = min(neighbors + 1, len(pts))
        _, idx = cKDTree(pts).query(pts, k=kk)
        for i, row in enumerate(np.atleast_2d(idx)):
            for j in row[1:]:
                if degrees[j] < degrees[i]:
                    violations.append((i, int(j)))
        if violations:
            log.info("semicontinuity audit: %d neighbour pairs drop degree (grid artifacts)", len(violations))
    return DegreeMap(pts, reports, int(degrees.max()), failed, violations)
