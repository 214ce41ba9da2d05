"""Independent closed forms used to check the package.

Nothing here imports the code under test; every function is written from
the explicit formulas of the examples.
"""
import numpy as np
from scipy import integrate


def h1_product(a, b):
    """(x, y, t)(x', y', t') = (x + x', y + y', t + t' + x y' - y x')."""
    x, y, t = a[..., 0], a[..., 1], a[..., 2]
    u, v, s = b[..., 0], b[..., 1], b[..., 2]
    return np.stack([x + u, y + v, t + s + x * v - y * u], axis=-1)


def h1xh1_product(a, b):
    """Componentwise H^1 law in coordinates (x1, y1, x2, y2, t1, t2)."""
    first = h1_product(a[..., [0, 1, 4]], b[..., [0, 1, 4]])
    second = h1_product(a[..., [2, 3, 5]], b[..., [2, 3, 5]])
    return np.stack([first[..., 0], first[..., 1], second[..., 0], second[..., 1],
                     first[..., 2], second[..., 2]], axis=-1)


def free23_product(a, b):
    """Free step-2 on 3 generators, t_ij += x_i x'_j - x_j x'_i for (12, 13, 23)."""
    out = a + b
    for n, (i, j) in enumerate([(0, 1), (0, 2), (1, 2)]):
        out[..., 3 + n] += a[..., i] * b[..., j] - a[..., j] * b[..., i]
    return out


def h1_frame_derivatives(grad, x):
    """Left-invariant X = d_x - y d_t and Y = d_y + x d_t applied to a gradient."""
    fx, fy, ft = grad
    return fx - x[1] * ft, fy + x[0] * ft


def h1_codim1_degree(grad, x):
    """3 where (Xf, Yf) != 0, else 2."""
    X, Y = h1_frame_derivatives(grad, x)
    return 2 if abs(X) < 1e-12 and abs(Y) < 1e-12 else 3


def pi_gauge_sum(z):
    """d(y, t) = |y| + |t|^(1/2) on the abelian group Pi."""
    return np.abs(z[..., 0]) + np.sqrt(np.abs(z[..., 1]))


def heisheis_point(x1, y1, y2):
    """The point of the heisheis surface above (x1, y1, y2), solved explicitly.

    x2 = x1^3, t2 = x1^2 + x2^4 and t1 the real root of t + t^3 = x1^2 + y1^2 + x2^3.
    """
    x1, y1, y2 = map(np.asarray, (x1, y1, y2))
    x2 = x1**3
    t2 = x1**2 + x2**4
    c = x1**2 + y1**2 + x2**3
    # Cardano for t^3 + t - c = 0 (one real root)
    disc = np.sqrt(c**2 / 4 + 1 / 27)
    t1 = np.cbrt(c / 2 + disc) + np.cbrt(c / 2 - disc)
    return np.stack([x1, y1, x2, y2, t1, t2], axis=-1)


def heisheis_rescaled(eta, r):
    """delta_{1/r} of the heisheis point with horizontal parameters r * eta."""
    p = heisheis_point(r * eta[:, 0], r * eta[:, 1], r * eta[:, 2])
    return p / np.array([r, r, r, r, r * r, r * r])


def paraboloid_ratio(r):
    """mu(Sigma cap B(0, r)) / r^2 for t = x^2 + y^2 in H^1 with gauge_max, eps = 1.

    The ball meets the surface in the disc |z| < r (t = |z|^2 < r^2), so the
    area is 2 pi int_0^r rho sqrt(1 + 4 rho^2) d rho, done by quadrature.
    """
    val, _ = integrate.quad(lambda rho: 2 * np.pi * rho * np.sqrt(1 + 4 * rho**2), 0, r,
                            epsabs=1e-14, epsrel=1e-13)
    return val / r**2


def paraboloid_ratio_closed(r):
    return np.pi * ((1 + 4 * r * r) ** 1.5 - 1) / (6 * r * r)


def disc_area_in_unit_ball():
    """Lebesgue area of {|z| < 1}: the frozen blow-up measure of the paraboloid at 0."""
    val, _ = integrate.dblquad(lambda rho, th: rho, 0, 2 * np.pi, 0, 1)
    return val


def brute_nearest(A, B, dist):
    """Nearest distance from each row of A to B by a plain double loop over A."""
    return np.array([dist(a, B).min() for a in A])
