"""Step-2 graded Lie algebras and their groups in exponential coordinates.

Points are plain numpy arrays of shape ``(..., q)`` holding graded
coordinates ``y`` with ``F(y) = exp(sum y_i W_i)``. Every array operation is
batched over leading axes. :class:`GroupPoint` is a thin typed wrapper for
single points.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np


class AlgebraError(ValueError):
    """Invalid structure constants or mismatched dimensions."""


def _canonical_rows(basis, tol=1e-12):
    """Orthonormal rows spanning the row space of ``basis``.

    The result depends only on the subspace: reduced row echelon form
    followed by Gram-Schmidt in pivot order, so every vector has a positive
    first nonzero entry.
    """
    a = np.array(basis, dtype=float, copy=True)
    if a.size == 0:
        return a.reshape(0, a.shape[-1] if a.ndim == 2 else 0)
    rows, cols = a.shape
    scale = max(np.abs(a).max(), 1.0)
    pivot_row = 0
    for c in range(cols):
        if pivot_row == rows:
            break
        r = pivot_row + int(np.argmax(np.abs(a[pivot_row:, c])))
        if abs(a[r, c]) <= tol * scale:
            a[pivot_row:, c] = 0.0
            continue
        a[[pivot_row, r]] = a[[r, pivot_row]]
        a[pivot_row] /= a[pivot_row, c]
        for i in range(rows):
            if i != pivot_row:
                a[i] -= a[i, c] * a[pivot_row]
        pivot_row += 1
    a = a[:pivot_row]
    out = []
    for v in a:
        w = v - sum(np.dot(v, u) * u for u in out) if out else v.copy()
        out.append(w / np.linalg.norm(w))
    return np.array(out).reshape(len(out), cols)


def canonical_basis(vectors, tol=1e-12):
    """Columns: deterministic orthonormal basis of the span of ``vectors`` (columns)."""
    vectors = np.asarray(vectors, dtype=float)
    return _canonical_rows(vectors.T, tol).T


def canonical_complement(basis, dim, tol=1e-12):
    """Columns: deterministic orthonormal basis of the orthogonal complement."""
    basis = np.asarray(basis, dtype=float).reshape(dim, -1)
    if basis.shape[1] == 0:
        return np.eye(dim)
    proj = np.eye(dim) - basis @ basis.T
    return canonical_basis(proj, tol=1e-9)


@dataclass(frozen=True, eq=False)
class GradedAlgebra:
    """Step-2 graded Lie algebra ``V1 (+) V2`` given by structure constants.

    ``struct[i, j, k]`` is the coefficient of ``W_k`` in ``[W_i, W_j]``
    (0-based). Only entries with ``i, j < m1 <= k`` may be nonzero.
    """

    m1: int
    m2: int
    struct: np.ndarray = field(repr=False)
    name: str = "custom"

    def __post_init__(self):
        q = self.m1 + self.m2
        if self.m1 < 1 or self.m2 < 0:
            raise AlgebraError(f"need m1 >= 1 and m2 >= 0, got m1={self.m1}, m2={self.m2}")
        c = np.array(self.struct, dtype=float)
        if c.shape != (q, q, q):
            raise AlgebraError(f"structure constants must have shape {(q, q, q)}, got {c.shape}")
        if not np.all(np.isfinite(c)):
            raise AlgebraError("structure constants must be finite")
        if not np.array_equal(c, -c.transpose(1, 0, 2)):
            bad = np.argwhere(c != -c.transpose(1, 0, 2))[0] + 1
            raise AlgebraError(f"structure constants are not antisymmetric at (i,j,k)={tuple(bad)}")
        mask = np.zeros((q, q, q), dtype=bool)
        mask[: self.m1, : self.m1, self.m1 :] = True
        if np.any(c[~mask] != 0):
            bad = np.argwhere((c != 0) & ~mask)[0] + 1
            raise AlgebraError(
                f"bracket entry (i,j,k)={tuple(bad)} violates the step-2 grading [V1,V1] in V2"
            )
        c.setflags(write=False)
        object.__setattr__(self, "struct", c)

    @classmethod
    def from_entries(cls, m1, m2, entries, name="custom"):
        """Build from ``(i, j, k, value)`` tuples with 1-based indices.

        An entry for ``(i, j, k)`` also defines ``(j, i, k)`` with the opposite
        sign; giving both with inconsistent values is an error.
        """
        q = m1 + m2
        c = np.zeros((q, q, q))
        seen = {}
        for entry in entries:
            if len(entry) != 4:
                raise AlgebraError(f"bracket entry {entry!r} must be (i, j, k, value)")
            i, j, k, v = entry
            for idx in (i, j, k):
                if int(idx) != idx or not 1 <= idx <= q:
                    raise AlgebraError(f"index {idx!r} in entry {entry!r} outside 1..{q}")
            i, j, k, v = int(i) - 1, int(j) - 1, int(k) - 1, float(v)
            if i == j and v != 0:
                raise AlgebraError(f"[W{i + 1},W{i + 1}] must vanish")
            for key, val in (((i, j, k), v), ((j, i, k), -v)):
                if key in seen and seen[key] != val:
                    raise AlgebraError(f"inconsistent entries for bracket {tuple(a + 1 for a in key)}")
                seen[key] = val
                c[key] = val
        return cls(m1, m2, c, name=name)

    # sizes -------------------------------------------------------------
    @property
    def q(self):
        return self.m1 + self.m2

    @property
    def weights(self):
        return np.array([1] * self.m1 + [2] * self.m2)

    @property
    def homogeneous_dimension(self):
        return self.m1 + 2 * self.m2

    Q = homogeneous_dimension

    @property
    def is_stratified(self):
        """True when ``[V1, V1] = V2`` (bracket generating)."""
        if self.m2 == 0:
            return True
        images = self.struct[: self.m1, : self.m1, self.m1 :].reshape(-1, self.m2)
        return np.linalg.matrix_rank(images) == self.m2

    @property
    def is_abelian(self):
        return not np.any(self.struct)

    def _check(self, *arrays):
        out = []
        for a in arrays:
            a = np.asarray(a, dtype=float)
            if a.shape[-1:] != (self.q,):
                raise AlgebraError(f"expected trailing dimension {self.q}, got shape {a.shape}")
            out.append(a)
        return out

    # algebra -----------------------------------------------------------
    def bracket(self, a, b):
        a, b = self._check(a, b)
        return np.einsum("...i,...j,ijk->...k", a, b, self.struct)

    def ad(self, x):
        """Matrix of ``y -> [x, y]``."""
        (x,) = self._check(x)
        return np.einsum("...i,ijk->...kj", x, self.struct)

    # group -------------------------------------------------------------
    def identity(self):
        return np.zeros(self.q)

    def multiply(self, x, y):
        """Exponential-coordinate product ``x + y + [x, y] / 2``."""
        x, y = self._check(x, y)
        return x + y + 0.5 * self.bracket(x, y)

    def inverse(self, x):
        (x,) = self._check(x)
        return -x

    def dilate(self, r, x):
        (x,) = self._check(x)
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise AlgebraError("dilation factor must be positive")
        return x * r[..., None] ** self.weights if r.ndim else x * r**self.weights

    def left_frame(self, x):
        """Columns are the left-invariant fields ``Y_i`` at ``x`` in coordinates.

        Left translation is affine in exponential coordinates of a step-2 group,
        so the frame is ``I + ad_x / 2``.
        """
        (x,) = self._check(x)
        return np.eye(self.q) + 0.5 * self.ad(x)

    # validation --------------------------------------------------------
    def check_invariants(self, atol=1e-12):
        """Raise :class:`AlgebraError` if a defining identity fails on the basis."""
        e = np.eye(self.q)
        for i in range(self.q):
            if np.any(np.abs(self.bracket(e[i], e[i])) > atol):
                raise AlgebraError("bracket is not alternating")
        for i, j in combinations(range(self.q), 2):
            b = self.bracket(e[i], e[j])
            if np.any(b[: self.m1] != 0):
                raise AlgebraError("bracket leaves V2")
            if (i >= self.m1 or j >= self.m1) and np.any(b != 0):
                raise AlgebraError("bracket with V2 must vanish in step 2")
        for i in range(self.q):
            for j in range(self.q):
                inner = self.bracket(e[j], e)  # [W_j, W_k] for all k
                if np.any(np.abs(self.bracket(e[i], inner)) > atol):
                    raise AlgebraError("Jacobi/step-2 condition fails")
        return True

    def point(self, coords):
        return GroupPoint(self, coords)

    def __repr__(self):
        return f"GradedAlgebra(name={self.name!r}, m1={self.m1}, m2={self.m2})"


@dataclass(frozen=True, eq=False)
class GroupPoint:
    algebra: GradedAlgebra
    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=float).reshape(-1)
        if c.shape != (self.algebra.q,):
            raise AlgebraError(f"point needs {self.algebra.q} coordinates, got {c.size}")
        if not np.all(np.isfinite(c)):
            raise AlgebraError("point coordinates must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    def _same(self, other):
        if other.algebra is not self.algebra:
            raise AlgebraError("points belong to different groups")

    def __mul__(self, other):
        self._same(other)
        return GroupPoint(self.algebra, self.algebra.multiply(self.coords, other.coords))

    def inverse(self):
        return GroupPoint(self.algebra, -self.coords)

    def dilate(self, r):
        return GroupPoint(self.algebra, self.algebra.dilate(r, self.coords))

    def frame(self):
        return TangentFrame(self, self.algebra.left_frame(self.coords))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)


@dataclass(frozen=True, eq=False)
class TangentFrame:
    point: GroupPoint
    frame: np.ndarray

    @property
    def horizontal(self):
        return self.frame[:, : self.point.algebra.m1]

    @property
    def vertical(self):
        return self.frame[:, self.point.algebra.m1 :]


# module-level conveniences mirroring the operation names
def bracket(algebra, a, b):
    return algebra.bracket(a, b)


def multiply(x: GroupPoint, y: GroupPoint) -> GroupPoint:
    return x * y


def inverse(x: GroupPoint) -> GroupPoint:
    return x.inverse()


def dilate(r, x: GroupPoint) -> GroupPoint:
    if r <= 0:
        raise AlgebraError("dilation factor must be positive")
    return x.dilate(r)


def left_invariant_frame(x: GroupPoint) -> TangentFrame:
    return x.frame()


# ---------------------------------------------------------------------------
# built-in groups

def heisenberg():
    """H^1 with [W1, W2] = 2 W3, i.e. t'' = t + t' + x y' - y x'."""
    return GradedAlgebra.from_entries(2, 1, [(1, 2, 3, 2)], name="h1")


def vertical_plane():
    """The abelian graded group Pi = {(0, y, t)} of H^1, coordinates (y, t)."""
    return GradedAlgebra.from_entries(1, 1, [], name="pi")


def heisenberg_product():
    """H^1 x H^1 in coordinates (x1, y1, x2, y2, t1, t2)."""
    return GradedAlgebra.from_entries(4, 2, [(1, 2, 5, 2), (3, 4, 6, 2)], name="h1xh1")


def free_step2(generators=3):
    """Free step-2 algebra; [W_i, W_j] = 2 W_{(i,j)} for i < j in lexicographic order."""
    pairs = list(combinations(range(1, generators + 1), 2))
    entries = [(i, j, generators + n + 1, 2) for n, (i, j) in enumerate(pairs)]
    return GradedAlgebra.from_entries(generators, len(pairs), entries, name=f"free2_{generators}")


def euclidean(n):
    """Abelian group R^n with every direction of weight 1."""
    return GradedAlgebra(n, 0, np.zeros((n, n, n)), name=f"r{n}")


BUILTIN_GROUPS = {
    "h1": heisenberg,
    "pi": vertical_plane,
    "h1xh1": heisenberg_product,
    "free2_3": free_step2,
}


def builtin_group(name):
    try:
        return BUILTIN_GROUPS[name]()
    except KeyError:
        raise AlgebraError(f"unknown built-in group {name!r}; choose from {sorted(BUILTIN_GROUPS)}") from None


def regrade(struct, complement, name="regraded"):
    """Grade a step-2 nilpotent algebra by a complement of its derived algebra.

    ``struct`` is the full ``(n, n, n)`` tensor of an arbitrary basis and the
    columns of ``complement`` span a subspace ``h`` with ``h (+) [g, g] = g``.
    The returned algebra uses orthonormalized bases of ``h`` and ``[g, g]``.
    """
    c = np.asarray(struct, dtype=float)
    n = c.shape[0]
    if c.shape != (n, n, n):
        raise AlgebraError("structure tensor must be cubic")
    if not np.allclose(c, -c.transpose(1, 0, 2)):
        raise AlgebraError("structure constants are not antisymmetric")
    derived = canonical_basis(c.reshape(n * n, n).T)
    m2 = derived.shape[1]
    if m2 == 0:
        raise AlgebraError("derived algebra is trivial")
    # step 2: brackets with the derived algebra vanish
    if np.abs(np.einsum("ia,ijk->ajk", derived, c)).max() > 1e-12:
        raise AlgebraError("algebra is not of step 2")
    h = canonical_basis(np.asarray(complement, dtype=float).reshape(n, -1))
    if h.shape[1] + m2 != n or np.linalg.matrix_rank(np.hstack([h, derived])) != n:
        raise AlgebraError("complement is not a complement of the derived algebra")
    basis = np.hstack([h, derived])
    inv = np.linalg.inv(basis)
    m1 = h.shape[1]
    new = np.einsum("ia,jb,ijk,ck->abc", basis, basis, c, inv)
    new[np.abs(new) < 1e-13] = 0.0
    new = 0.5 * (new - new.transpose(1, 0, 2))
    # numerical dust outside the V2 block is projected away after the check
    off = new.copy()
    off[:m1, :m1, m1:] = 0.0
    if np.abs(off).max(initial=0.0) > 1e-9:
        raise AlgebraError("regraded brackets leave V2")
    cleaned = np.zeros_like(new)
    cleaned[:m1, :m1, m1:] = new[:m1, :m1, m1:]
    return GradedAlgebra(m1, m2, cleaned, name=name), basis
