"""Intrinsic blow-up of polynomial submanifolds of step-2 groups.

At a point ``x`` of ``Sigma = f^-1(0)`` we build an orthonormal graded basis
adapted to ``T_x Sigma`` (the adapted frame), write ``x^-1 Sigma`` as a graph
``y = psi(xi)`` over the free coordinates, and read off the homogeneous
polynomial map ``T`` whose image is the limit of ``delta_{1/r}(x^-1 Sigma)``.

Slot layout of adapted coordinates ``y`` (0-based, ``m = m1``)::

    [0, kappa)          horizontal normal directions      graph, limit 0
    [kappa, m)          horizontal tangent directions     free
    [m, m + l)          second-layer completion           graph, limit Q_j
    [m + l, q)          remaining second layer            free
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .group import canonical_basis, canonical_complement
from .metric import HomogeneousDistance
from .polynomial import Polynomial, coefficient_to_json
from .submanifold import ImplicitSubmanifold, numerical_rank, pointwise_degree

log = logging.getLogger(__name__)

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50
ZERODERIV_TOL = 1e-10
COEFF_TOL = 1e-12


class GraphDomainError(RuntimeError):
    """Newton failed to solve for the graph at some parameters."""

    def __init__(self, message, failed=None):
        super().__init__(message)
        self.failed = failed


class BlowupError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# adapted frame

@dataclass(frozen=True, eq=False)
class AdaptedFrame:
    sigma: ImplicitSubmanifold
    point: np.ndarray
    kappa: int
    l: int
    basis: np.ndarray  # columns Y_1..Y_q as algebra vectors; block diagonal

    @property
    def m(self):
        return self.sigma.algebra.m1

    @property
    def q(self):
        return self.sigma.algebra.q

    @property
    def k(self):
        return self.sigma.k

    @property
    def p(self):
        return self.sigma.p

    @property
    def h(self):
        return self.m - self.kappa

    @property
    def graph_slots(self):
        return list(range(self.kappa)) + list(range(self.m, self.m + self.l))

    @property
    def free_slots(self):
        return list(range(self.kappa, self.m)) + list(range(self.m + self.l, self.q))

    @property
    def free_weights(self):
        return np.array([1] * self.h + [2] * (self.q - self.m - self.l))

    @property
    def coordinate_matrix(self):
        """``A`` with ``F_x(y) = x . F(y) = x + A y`` in graded coordinates."""
        return self.sigma.algebra.left_frame(self.point) @ self.basis

    @property
    def vectors(self):
        """The frame vectors ``v_j = Y_j(x)`` as coordinate tangent vectors."""
        return self.coordinate_matrix

    def check(self, atol=1e-10):
        """Verify the defining properties; returns a dict of residuals."""
        JY = self.sigma.jacobian(self.point) @ self.coordinate_matrix
        scale = max(np.abs(JY).max(), 1.0)
        tangent = np.abs(JY[:, self.kappa : self.m]).max(initial=0.0)
        rank = numerical_rank(JY[:, self.graph_slots], ref=np.linalg.svd(JY, compute_uv=False)[0])
        orth = np.abs(self.basis.T @ self.basis - np.eye(self.q)).max()
        out = {"tangent_residual": float(tangent), "graph_rank": rank, "orthonormality": float(orth)}
        if tangent > atol * scale or rank != self.k or orth > 1e-12 or self.kappa + self.l != self.k:
            raise BlowupError(f"adapted frame invariants fail: {out}")
        return out


def adapted_frame(sigma: ImplicitSubmanifold, x, second_layer=None) -> AdaptedFrame:
    """Adapted orthonormal graded frame at ``x``.

    ``second_layer`` optionally fixes the completion vectors
    ``v_{m+1}..v_{m+l}`` (columns, in V2 coordinates); by default they span
    the row space of the second-layer Jacobian after removing what the
    horizontal normal directions already reach.
    """
    x = sigma.check_point(x)
    alg = sigma.algebra
    m1, m2, k = alg.m1, alg.m2, sigma.k
    JL = sigma.frame_jacobian(x)
    ref = np.linalg.svd(JL, compute_uv=False)[0]
    JH = JL[:, :m1]
    rank_h = numerical_rank(JH, ref=ref, tol=sigma.rank_tol)
    _, _, vt = np.linalg.svd(JH)
    tangent_h = canonical_basis(vt[rank_h:].T) if rank_h < m1 else np.zeros((m1, 0))
    normal_h = canonical_complement(tangent_h, m1)
    kappa = normal_h.shape[1]
    l = k - kappa
    if kappa != rank_h:
        raise BlowupError("horizontal kernel and complement dimensions disagree")

    reached = JH @ normal_h
    if kappa:
        U, _, _ = np.linalg.svd(reached, full_matrices=False)
        proj = np.eye(k) - U @ U.T
    else:
        proj = np.eye(k)
    JV = JL[:, m1:]
    if second_layer is None:
        if l:
            M = proj @ JV
            second = canonical_basis(M.T)
            if second.shape[1] != l:
                # fall back on the l dominant right singular directions
                _, _, vt2 = np.linalg.svd(M)
                second = canonical_basis(vt2[:l].T)
        else:
            second = np.zeros((m2, 0))
    else:
        second = np.asarray(second_layer, dtype=float).reshape(m2, -1)
        if second.shape[1] != l:
            raise BlowupError(f"need exactly l={l} completion vectors, got {second.shape[1]}")
        second = np.linalg.qr(second)[0] if l else second
    if l:
        full = np.hstack([reached, JV @ second])
        if numerical_rank(full, ref=ref, tol=sigma.rank_tol) != k:
            raise BlowupError("second-layer completion does not make df(x) surjective")
    free_v = canonical_complement(second, m2) if m2 else np.zeros((0, 0))

    B = np.zeros((alg.q, alg.q))
    B[:m1, :m1] = np.hstack([normal_h, tangent_h])
    if m2:
        B[m1:, m1:] = np.hstack([second, free_v])
    frame = AdaptedFrame(sigma, x, kappa, l, B)
    frame.check()
    return frame


# ---------------------------------------------------------------------------
# implicit graph

class ImplicitGraph:
    """``y = psi(xi)`` solving ``f(x + A y) = 0`` near ``xi = 0``.

    Exact first and second derivatives of the graph functions at ``0`` are
    obtained by implicit differentiation against the polynomial Jacobian and
    Hessians.
    """

    def __init__(self, frame: AdaptedFrame):
        self.frame = frame
        sigma = frame.sigma
        self.sigma = sigma
        self.A = frame.coordinate_matrix
        self.G = np.array(frame.graph_slots, dtype=int)
        self.F = np.array(frame.free_slots, dtype=int)
        x = frame.point
        Jt = sigma.jacobian(x) @ self.A
        Ht = np.einsum("ia,kij,jb->kab", self.A, sigma.hessian(x), self.A)
        Jg, Jf = Jt[:, self.G], Jt[:, self.F]
        self.first = -np.linalg.solve(Jg, Jf)  # (k, p): d phi^g / d xi_f
        dpsi = self._dpsi(self.first)
        contraction = np.einsum("ia,kij,jb->kab", dpsi, Ht, dpsi)
        self.second = -np.einsum("gk,kab->gab", np.linalg.inv(Jg), contraction)  # (k, p, p)
        self.zeroderiv_residual = float(np.abs(self.first[:, : frame.h]).max(initial=0.0))
        if self.zeroderiv_residual > ZERODERIV_TOL:
            raise BlowupError(
                f"first derivatives along horizontal tangent directions do not vanish "
                f"(max {self.zeroderiv_residual:.2e})"
            )

    @property
    def p(self):
        return len(self.F)

    def _dpsi(self, dphi):
        q = self.frame.q
        out = np.zeros(dphi.shape[:-2] + (q, self.p))
        out[..., self.F, :] = np.eye(self.p)
        out[..., self.G, :] = dphi
        return out

    def taylor(self, xi):
        """Second-order Taylor polynomial of the graph functions."""
        xi = np.asarray(xi, dtype=float)
        return xi @ self.first.T + 0.5 * np.einsum("...a,gab,...b->...g", xi, self.second, xi)

    def assemble(self, xi, yg):
        xi = np.asarray(xi, dtype=float)
        y = np.zeros(xi.shape[:-1] + (self.frame.q,))
        y[..., self.F] = xi
        y[..., self.G] = yg
        return y

    def evaluate(self, xi, tol=NEWTON_TOL, max_iter=NEWTON_MAX_ITER, strict=True):
        """Adapted coordinates ``psi(xi)`` for a batch ``xi`` of shape (N, p).

        Damped Newton on the graph variables. With ``strict=False`` returns
        ``(y, converged)`` instead of raising on failures.
        """
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        x0, A, G = self.frame.point, self.A, self.G
        yg = self.taylor(xi)
        y = self.assemble(xi, yg)
        res = self.sigma.value(x0 + y @ A.T)
        err = np.max(np.abs(res), axis=-1)
        ok = err <= tol
        active = np.flatnonzero(~ok)
        stalled = np.zeros(len(xi), dtype=bool)
        for _ in range(max_iter):
            if active.size == 0:
                break
            ya = y[active]
            J = self.sigma.jacobian(x0 + ya @ A.T) @ A[:, G]
            try:
                step = np.linalg.solve(J, res[active][..., None])[..., 0]
            except np.linalg.LinAlgError:
                step = (np.linalg.pinv(J) @ res[active][..., None])[..., 0]
            t = np.ones(len(active))
            base_err = err[active]
            new_y = ya.copy()
            new_res = res[active].copy()
            pending = np.arange(len(active))
            for _halving in range(12):
                trial = ya[pending].copy()
                trial[:, G] -= t[pending, None] * step[pending]
                r = self.sigma.value(x0 + trial @ A.T)
                e = np.max(np.abs(r), axis=-1)
                better = (e < base_err[pending]) | (e <= tol)
                idx = pending[better]
                new_y[idx] = trial[better]
                new_res[idx] = r[better]
                pending = pending[~better]
                if pending.size == 0:
                    break
                t[pending] *= 0.5
            stalled[active[pending]] = True
            y[active] = new_y
            res[active] = new_res
            err[active] = np.max(np.abs(new_res), axis=-1)
            ok = err <= tol
            active = np.flatnonzero(~ok & ~stalled)
        # roundoff floor: accept stalled points whose residual is at rounding level
        scale = 1.0 + np.abs(y).max(axis=-1) ** 4
        ok |= stalled & (err <= 1e3 * tol * scale)
        if strict and not np.all(ok):
            bad = np.flatnonzero(~ok)
            raise GraphDomainError(
                f"graph Newton failed at {bad.size} of {len(xi)} parameters "
                f"(worst residual {err[bad].max():.2e}); shrink the domain",
                failed=bad,
            )
        return y if strict else (y, ok)

    def derivative(self, y):
        """``d psi / d xi`` at adapted points ``y`` (N, q) -> (N, q, p)."""
        x0, A = self.frame.point, self.A
        J = self.sigma.jacobian(x0 + y @ A.T) @ A
        dphi = -np.linalg.solve(J[..., self.G], J[..., self.F])
        return self._dpsi(dphi)

    def finite_difference(self, step=1e-4):
        """Central-difference first and second derivatives at 0 (validation only)."""
        p = self.p
        e = np.eye(p) * step
        pts = [np.zeros(p)] + [s * v for v in e for s in (1, -1)]
        pts += [a * e[i] + b * e[j] for i in range(p) for j in range(i + 1, p) for a in (1, -1) for b in (1, -1)]
        y = self.evaluate(np.array(pts))
        g = y[:, self.G]
        f0 = g[0]
        first = np.zeros((len(self.G), p))
        second = np.zeros((len(self.G), p, p))
        for i in range(p):
            fp, fm = g[1 + 2 * i], g[2 + 2 * i]
            first[:, i] = (fp - fm) / (2 * step)
            second[:, i, i] = (fp - 2 * f0 + fm) / step**2
        pos = 1 + 2 * p
        for i in range(p):
            for j in range(i + 1, p):
                fpp, fpm, fmp, fmm = g[pos : pos + 4]
                pos += 4
                second[:, i, j] = second[:, j, i] = (fpp - fpm - fmp + fmm) / (4 * step**2)
        return first, second


def implicit_graph(sigma, x, frame=None) -> ImplicitGraph:
    frame = frame or adapted_frame(sigma, x)
    return ImplicitGraph(frame)


# ---------------------------------------------------------------------------
# blow-up variety

def _rationalize(v, tol=COEFF_TOL, snap=1e-14):
    """Zero below ``tol``; a fraction with denominator <= 1e6 if it matches ``v``
    to roundoff level ``snap``; the float otherwise (irrational coefficients)."""
    if abs(v) <= tol:
        return Fraction(0)
    f = Fraction(float(v)).limit_denominator(10**6)
    if abs(float(f) - v) <= snap * max(1.0, abs(v)):
        return f
    return float(v)


def _free_names(p):
    return [f"u{i + 1}" for i in range(p)]


@dataclass(frozen=True, eq=False)
class BlowupVariety:
    """Homogeneous polynomial graph ``A = F(B T(R^p))`` and its defining map ``P``.

    ``T`` lives in adapted coordinates; ``parametrization`` and
    ``defining_polynomial`` are written in the group's graded coordinates.
    """

    frame: AdaptedFrame
    graph: ImplicitGraph
    T: tuple  # q polynomials in p variables, adapted coordinates
    Q: tuple  # l polynomials in p variables
    P_adapted: tuple  # k polynomials in q adapted variables
    parametrization: tuple  # q polynomials in p variables, graded coordinates
    defining_polynomial: tuple  # k polynomials in q graded coordinates
    degree: int

    @property
    def algebra(self):
        return self.frame.sigma.algebra

    @property
    def is_linear(self):
        return all(c.degree <= 1 for c in self.T)

    def sample(self, eta):
        """Points of the variety (graded coordinates) for parameters ``eta`` (N, p)."""
        eta = np.atleast_2d(np.asarray(eta, dtype=float))
        from .polynomial import CompiledMap

        return CompiledMap(list(self.parametrization))(eta)

    def residual(self, z):
        from .polynomial import CompiledMap

        return CompiledMap(list(self.defining_polynomial))(np.atleast_2d(z))

    def homogeneity_defect(self):
        """Monomials of ``T`` whose weighted degree differs from their slot weight."""
        w_free = self.frame.free_weights
        weights = self.algebra.weights
        bad = []
        for slot, comp in enumerate(self.T):
            for e in comp.terms:
                wd = int(np.dot(w_free, e))
                if wd != weights[slot]:
                    bad.append((slot, e))
        return bad

    def is_homogeneous(self):
        """``T o delta~_h = delta_h o T`` as a polynomial identity."""
        return not self.homogeneity_defect()

    def composition_residual(self):
        """Largest coefficient of ``P(F(B T(xi)))`` (identically zero in theory)."""
        comp = [P.compose(list(self.parametrization)) for P in self.defining_polynomial]
        return max(c.max_abs_coeff() for c in comp) if comp else 0.0

    def dilation_invariance(self, eta, r):
        """Max residual of ``P`` on ``delta_r`` of sampled variety points."""
        z = self.algebra.dilate(r, self.sample(eta))
        return float(np.abs(self.residual(z)).max())

    def to_dict(self):
        fr = self.frame
        p = fr.p
        names = _free_names(p)
        free_slots = fr.free_slots
        slot_var = {s: names[i] for i, s in enumerate(free_slots)}

        def terms_of(poly, degree):
            out = {}
            for e, c in sorted(poly.terms.items()):
                if sum(e) == degree:
                    mono = "*".join(
                        names[i] if a == 1 else f"{names[i]}^{a}" for i, a in enumerate(e) if a
                    )
                    out[mono] = coefficient_to_json(c)
            return out

        graded_names = [f"x{i + 1}" for i in range(fr.q)]
        return {
            "group": self.algebra.name,
            "point": [float(v) for v in fr.point],
            "degree": self.degree,
            "kappa": fr.kappa,
            "l": fr.l,
            "h": fr.h,
            "p": p,
            "k": fr.k,
            "adapted_basis": [[_json_num(v) for v in col] for col in fr.basis.T],
            "free_variables": {slot_var[s]: s + 1 for s in free_slots},
            "zero_slots": [s + 1 for s in range(fr.kappa)],
            "linear_terms": {str(fr.m + j + 1): terms_of(self.Q[j], 1) for j in range(fr.l)},
            "quadratic_terms": {str(fr.m + j + 1): terms_of(self.Q[j], 2) for j in range(fr.l)},
            "parametrization": [c.to_string(names) for c in self.parametrization],
            "defining_polynomial": [P.to_string(graded_names) for P in self.defining_polynomial],
            "is_linear": self.is_linear,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _json_num(v):
    r = _rationalize(v)
    return coefficient_to_json(r)


def _clean(poly):
    terms = {e: _rationalize(c) for e, c in poly.terms.items()}
    return Polynomial(poly.nvars, terms)


def blowup_variety(sigma, x, frame=None, second_layer=None) -> BlowupVariety:
    """Blow-up set of ``Sigma`` at ``x`` as the graph of a homogeneous polynomial map."""
    if frame is None:
        frame = adapted_frame(sigma, x, second_layer=second_layer)
    graph = ImplicitGraph(frame)
    p, q, m, kappa, l, h = frame.p, frame.q, frame.m, frame.kappa, frame.l, frame.h
    free_v1 = range(h)
    free_v2 = range(h, p)

    Qs = []
    for j in range(l):
        g = kappa + j  # row of the graph derivatives for slot m + j
        terms = {}
        for a in free_v2:
            e = [0] * p
            e[a] = 1
            terms[tuple(e)] = float(graph.first[g, a])
        for a in free_v1:
            for b in free_v1:
                e = [0] * p
                e[a] += 1
                e[b] += 1
                terms[tuple(e)] = terms.get(tuple(e), 0.0) + 0.5 * float(graph.second[g, a, b])
        Qs.append(_clean(Polynomial(p, terms)))

    T = []
    free_index = {s: i for i, s in enumerate(frame.free_slots)}
    for slot in range(q):
        if slot < kappa:
            T.append(Polynomial(p))
        elif slot in free_index:
            T.append(Polynomial.variable(p, free_index[slot]))
        else:
            T.append(Qs[slot - m])

    # P in adapted coordinates
    P_ad = [Polynomial.variable(q, s) for s in range(kappa)]
    for j in range(l):
        free_vars = [Polynomial.variable(q, s) for s in frame.free_slots]
        P_ad.append(Polynomial.variable(q, m + j) - Qs[j].compose(free_vars))

    B = frame.basis
    # graded coordinates z = B y, so y = B^T z
    y_of_z = [_clean(Polynomial.linear([float(B[i, s]) for i in range(q)])) for s in range(q)]
    P_z = tuple(_clean(P.compose(y_of_z)) for P in P_ad)
    param = []
    for i in range(q):
        acc = Polynomial(p)
        for s in range(q):
            if abs(B[i, s]) > COEFF_TOL:
                acc = acc + T[s] * _rationalize(B[i, s])
        param.append(_clean(acc))

    degree = pointwise_degree(sigma, frame.point).degree
    return BlowupVariety(frame, graph, tuple(T), tuple(Qs), tuple(P_ad), tuple(param), P_z, degree)


# ---------------------------------------------------------------------------
# rescaling and convergence

def _param_box(frame, d: HomogeneousDistance, R):
    """Half-widths in the free parameters covering ``D_R`` of the rescaled set."""
    return np.array([R] * frame.h + [float(d.vertical_extent(R))] * (frame.p - frame.h))


def rescaled_points(variety: BlowupVariety, r, eta):
    """``delta_{1/r}(x^-1 Sigma)`` at parameters ``eta``: ``delta_{1/r} B psi(delta~_r eta)``."""
    fr = variety.frame
    alg = fr.sigma.algebra
    eta = np.atleast_2d(np.asarray(eta, dtype=float))
    y = variety.graph.evaluate(eta * r**fr.free_weights)
    return alg.dilate(1.0 / r, y @ fr.basis.T)


def rescale_manifold(sigma, x, r, d: HomogeneousDistance, R=1.0, n=10_000, seed=0, variety=None):
    """Point cloud of ``delta_{1/r}(x^-1 Sigma)`` within the closed ball ``D_R``.

    Returns ``(points, eta)`` with ``eta`` the parameters of the kept points.
    """
    if r <= 0 or R <= 0:
        raise ValueError("r and R must be positive")
    variety = variety or blowup_variety(sigma, x)
    rng = np.random.default_rng(seed)
    eta = rng.uniform(-1, 1, size=(n, variety.frame.p)) * _param_box(variety.frame, d, R)
    pts = rescaled_points(variety, r, eta)
    keep = d.norm(pts) <= R
    return pts[keep], eta[keep]


def directed_hausdorff(A, B, d: HomogeneousDistance, chunk=128):
    """``max_a min_b rho(a, b)`` by brute force over chunks of ``A``."""
    if len(A) == 0:
        return 0.0
    if len(B) == 0:
        return float("inf")
    return float(nearest_distances(A, B, d, chunk).max())


def _pair_distances(a, b, d: HomogeneousDistance):
    """``rho(a_i, b_j)`` for all pairs, shape (len(a), len(b))."""
    alg = d.algebra
    m1 = alg.m1
    dh = b[None, :, :m1] - a[:, None, :m1]
    hn = np.sqrt(np.einsum("abi,abi->ab", dh, dh))
    if not alg.m2:
        return hn
    C = alg.struct[:m1, :m1, m1:]  # (m1, m1, m2)
    aC = np.einsum("ai,ijk->akj", a[:, :m1], C)
    br = np.einsum("akj,bj->abk", aC, b[:, :m1])  # V2 part of [a, b]
    dv = b[None, :, m1:] - a[:, None, m1:] - 0.5 * br
    vabs = np.sqrt(np.sqrt(np.einsum("abk,abk->ab", dv, dv)))
    return np.maximum(hn, d.epsilon * vabs) if d.kind == "gauge_max" else hn + d.epsilon * vabs


def nearest_distances(A, B, d: HomogeneousDistance, chunk=128, exclude_self=False, upper=None):
    """For every ``a`` in ``A`` the distance to its nearest neighbour in ``B``.

    Exact sweep: ``B`` is sorted by its first coordinate and, since
    ``|a_1 - b_1| <= rho(a, b)`` for both gauges, only the window of ``B``
    within the current upper bound of each chunk of ``A`` is scanned. The
    bound starts from the neighbours in sort order and ``upper`` if given.
    With ``exclude_self`` ``A`` and ``B`` are the same array.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    out = np.full(len(A), np.inf)
    if len(A) == 0 or len(B) == 0:
        return out
    order = np.argsort(B[:, 0], kind="stable")
    Bs = B[order]
    key = Bs[:, 0]
    ia = np.arange(len(A))
    pos = np.searchsorted(key, A[:, 0])
    ub = np.full(len(A), np.inf) if upper is None else np.asarray(upper, dtype=float).copy()
    for off in (-2, -1, 0, 1):
        j = np.clip(pos + off, 0, len(B) - 1)
        dist = d.distance(A, Bs[j])
        if exclude_self:
            dist[order[j] == ia] = np.inf
        ub = np.minimum(ub, dist)
    a_order = np.argsort(A[:, 0], kind="stable")
    for start in range(0, len(A), chunk):
        idx = a_order[start : start + chunk]
        a = A[idx]
        lo = np.searchsorted(key, np.min(a[:, 0] - ub[idx]), side="left")
        hi = np.searchsorted(key, np.max(a[:, 0] + ub[idx]), side="right")
        dist = _pair_distances(a, Bs[lo:hi], d)
        if exclude_self:
            dist[order[lo:hi][None, :] == idx[:, None]] = np.inf
        out[idx] = dist.min(axis=1, initial=np.inf)
    return out


@dataclass
class ConvergenceRow:
    r: float
    distance: float
    ratio: float
    sigma_to_variety: float
    variety_to_sigma: float
    spacing: float
    n_sigma: int
    n_variety: int
    undersampled: bool


@dataclass
class ConvergenceTable:
    rows: list
    R: float
    n: int
    seed: int
    log_slope: float
    monotone: bool

    def ratio_band(self):
        ratios = [row.ratio for row in self.rows]
        return min(ratios), max(ratios)


def _cloud_parameters(variety, d, R, n, seed, margin=1.0, batch=8192):
    """Uniform parameters of variety points in ``D_{margin R}``, stopping at the
    ``n``-th point that lies in ``D_R``."""
    rng = np.random.default_rng(seed)
    half = _param_box(variety.frame, d, margin * R)
    kept, count = [], 0
    while count < n:
        eta = rng.uniform(-1, 1, size=(batch, variety.frame.p)) * half
        norms = d.norm(variety.sample(eta))
        eta = eta[norms <= margin * R]
        inner = np.cumsum(norms[norms <= margin * R] <= R)
        if count + inner[-1:].sum() >= n:
            stop = int(np.searchsorted(inner, n - count)) + 1
            kept.append(eta[:stop])
            break
        kept.append(eta)
        count += int(inner[-1]) if len(inner) else 0
    return np.concatenate(kept)


def hausdorff_convergence(sigma, x, radii, d: HomogeneousDistance, R=1.0, n=10_000, seed=0,
                          variety=None, margin=1.25) -> ConvergenceTable:
    """Local Hausdorff distance between ``delta_{1/r}(x^-1 Sigma)`` and the blow-up set.

    ``n`` variety points are drawn in ``D_R``, plus those of the same uniform
    draw that fall in ``D_{margin R}``. Both sets are sampled at the same
    parameters ``eta`` (common random numbers), so the distance measures the
    geometric defect rather than the sampling noise. The directed distances compare the part of each cloud
    inside ``D_R`` with the other cloud inside ``D_{margin R}``; this removes
    the spurious boundary effect of cutting both clouds at exactly ``R``.
    """
    variety = variety or blowup_variety(sigma, x)
    radii = [float(r) for r in radii]
    fr = variety.frame
    eta = _cloud_parameters(variety, d, R, n, seed, margin)
    V = variety.sample(eta)
    nV = d.norm(V)
    V_in, V_out = V[nV <= R], V[nV <= margin * R]
    spacing = float(np.median(nearest_distances(V_in, V_in, d, exclude_self=True))) if len(V_in) > 1 else np.inf
    rows = []
    for r in radii:
        S = rescaled_points(variety, r, eta)
        nS = d.norm(S)
        S_in, S_out = S[nS <= R], S[nS <= margin * R]
        d1 = directed_hausdorff(S_in, V_out, d)
        d2 = directed_hausdorff(V_in, S_out, d)
        dist = max(d1, d2)
        under = spacing > 0.1 * dist
        if under:
            log.warning("r=%g: nearest-neighbour spacing %.3g exceeds 10%% of distance %.3g", r, spacing, dist)
        rows.append(ConvergenceRow(r, dist, dist / r, d1, d2, spacing, len(S_in), len(V_in), under))
    rs = np.array([row.r for row in rows])
    ds = np.array([row.distance for row in rows])
    positive = ds > 0
    slope = float(np.polyfit(np.log(rs[positive]), np.log(ds[positive]), 1)[0]) if positive.sum() >= 2 else float("nan")
    order = np.argsort(rs)
    monotone = bool(np.all(np.diff(ds[order]) >= 0))
    return ConvergenceTable(rows, R, n, seed, slope, monotone)
