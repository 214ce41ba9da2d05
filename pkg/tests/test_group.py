from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from carnot.group import (AlgebraError, GradedAlgebra, builtin_group, canonical_basis, heisenberg,
                          regrade)

H1 = heisenberg()


def rand_points(alg, n, rng, scale=3.0):
    return rng.uniform(-scale, scale, size=(n, alg.q))


def test_bracket_examples():
    e = np.eye(3)
    np.testing.assert_array_equal(H1.bracket(e[0], e[1]), [0, 0, 2])
    np.testing.assert_array_equal(H1.bracket(e[2], e[0]), [0, 0, 0])
    v = np.array([0.3, -1.2, 4.0])
    np.testing.assert_array_equal(H1.bracket(v, v), 0)


def test_h1_law_examples():
    np.testing.assert_array_equal(H1.multiply([1, 0, 0], [0, 1, 0]), [1, 1, 1])
    np.testing.assert_array_equal(H1.inverse([1, 2, 3]), [-1, -2, -3])
    np.testing.assert_array_equal(H1.dilate(2, [1, 1, 1]), [2, 2, 4])


def test_h1_law_exact_on_rationals(rng):
    # binary fractions are exact in floating point, so the law must match bit for bit
    a = rng.integers(-64, 64, size=(1000, 3)) / 8.0
    b = rng.integers(-64, 64, size=(1000, 3)) / 8.0
    np.testing.assert_array_equal(H1.multiply(a, b), oracles.h1_product(a, b))
    x, y = (Fraction(1, 3), Fraction(2, 7), Fraction(5, 11)), (Fraction(-3, 4), Fraction(1, 5), Fraction(2, 9))
    got = H1.multiply(np.array(x, dtype=float), np.array(y, dtype=float))
    want = [x[0] + y[0], x[1] + y[1], x[2] + y[2] + x[0] * y[1] - x[1] * y[0]]
    np.testing.assert_allclose(got, [float(w) for w in want], rtol=0, atol=1e-15)


@pytest.mark.parametrize("name,law", [("h1", oracles.h1_product), ("h1xh1", oracles.h1xh1_product),
                                      ("free2_3", oracles.free23_product)])
def test_products_match_explicit_laws(name, law, rng):
    alg = builtin_group(name)
    a, b = rand_points(alg, 1000, rng), rand_points(alg, 1000, rng)
    np.testing.assert_allclose(alg.multiply(a, b), law(a, b), atol=1e-12)


def test_group_axioms(algebra, rng):
    n = 10_000
    x, y, z = (rand_points(algebra, n, rng) for _ in range(3))
    lhs = algebra.multiply(algebra.multiply(x, y), z)
    rhs = algebra.multiply(x, algebra.multiply(y, z))
    assert np.abs(lhs - rhs).max() <= 1e-12
    assert np.abs(algebra.multiply(x, algebra.identity()) - x).max() == 0
    assert np.abs(algebra.multiply(x, algebra.inverse(x))).max() <= 1e-12


def test_dilation_automorphism(algebra, rng):
    x, y = rand_points(algebra, 10_000, rng), rand_points(algebra, 10_000, rng)
    r = rng.uniform(0.1, 5, size=10_000)
    s = rng.uniform(0.1, 5, size=10_000)
    lhs = algebra.dilate(r, algebra.multiply(x, y))
    rhs = algebra.multiply(algebra.dilate(r, x), algebra.dilate(r, y))
    assert np.abs(lhs - rhs).max() <= 1e-10 * max(1.0, np.abs(lhs).max())
    np.testing.assert_allclose(algebra.dilate(r, algebra.dilate(s, x)), algebra.dilate(r * s, x), rtol=1e-13)
    np.testing.assert_array_equal(algebra.dilate(1.0, x), x)


@pytest.mark.parametrize("r", [0.0, -1.0])
def test_dilation_rejects_nonpositive(r):
    with pytest.raises(ValueError):
        H1.dilate(r, [1, 2, 3])


def test_left_frame_examples(rng):
    np.testing.assert_array_equal(H1.left_frame([1, 0, 0]), [[1, 0, 0], [0, 1, 0], [0, 1, 1]])
    np.testing.assert_array_equal(H1.left_frame([0, 0, 0]), np.eye(3))
    x = np.array([0.4, -1.3, 2.0])
    frame = H1.left_frame(x)
    np.testing.assert_allclose(frame[:, 0], [1, 0, -x[1]])
    np.testing.assert_allclose(frame[:, 1], [0, 1, x[0]])


def test_left_frame_is_derivative_of_translation(algebra, rng):
    x = rand_points(algebra, 1, rng)[0]
    h = 1e-6
    E = np.eye(algebra.q)
    fd = np.stack([(algebra.multiply(x, h * e) - algebra.multiply(x, -h * e)) / (2 * h) for e in E], axis=1)
    np.testing.assert_allclose(algebra.left_frame(x), fd, atol=1e-8)
    X = rand_points(algebra, 10_000, rng)
    np.testing.assert_allclose(np.linalg.det(algebra.left_frame(X)), 1.0, atol=1e-9)


def test_invariants_and_dimensions(algebra):
    algebra.check_invariants()
    assert algebra.homogeneous_dimension == algebra.m1 + 2 * algebra.m2
    assert list(algebra.weights) == [1] * algebra.m1 + [2] * algebra.m2


def test_stratified_flags():
    assert builtin_group("h1").is_stratified
    assert not builtin_group("pi").is_stratified
    assert builtin_group("pi").is_abelian


@pytest.mark.parametrize("entries", [
    [(1, 2, 2, 1.0)],  # bracket into V1
    [(1, 2, 3, 1.0), (2, 1, 3, 1.0)],  # inconsistent mirror
    [(1, 1, 3, 1.0)],  # diagonal
])
def test_invalid_structure_rejected(entries):
    with pytest.raises(AlgebraError):
        GradedAlgebra.from_entries(2, 1, entries)


def test_regrade_with_other_complement():
    c = H1.struct
    complement = np.array([[1.0, 0.0], [0.0, 1.0], [0.5, -2.0]])  # tilted horizontal plane
    alg, basis = regrade(c, complement)
    alg.check_invariants()
    assert (alg.m1, alg.m2) == (2, 1)
    h, v = basis[:, :2], basis[:, 2:]
    np.testing.assert_allclose(h.T @ h, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(v.T @ v, np.eye(1), atol=1e-12)
    # the new bracket is the old one written in the new basis
    rng = np.random.default_rng(0)
    a, b = rng.normal(size=(2, 3))
    np.testing.assert_allclose(basis @ alg.bracket(a, b), H1.bracket(basis @ a, basis @ b), atol=1e-12)


def test_canonical_basis_is_deterministic():
    v = np.array([[2.0, 0.0], [0.0, -3.0], [1.0, 1.0]])
    b1 = canonical_basis(v)
    b2 = canonical_basis(v[:, ::-1] * 7)
    np.testing.assert_allclose(b1, b2, atol=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=6, max_size=6), st.lists(st.floats(-100, 100), min_size=6, max_size=6))
def test_bracket_antisymmetry_property(a, b):
    alg = builtin_group("h1xh1")
    a, b = np.array(a), np.array(b)
    np.testing.assert_allclose(alg.bracket(a, b), -alg.bracket(b, a), atol=1e-9)
    assert np.all(alg.bracket(a, b)[: alg.m1] == 0)
