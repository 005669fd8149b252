import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skewnet.algebra import Mat2, Quaternion, quat_to_mat2
from skewnet.errors import ValidationError
from skewnet.factor import (
    AllZero,
    DegenerateColumns,
    MatrixPolynomial,
    NotARoot,
    NotIndependent,
    ZeroPolynomial,
    conjugate_pairing,
    det_poly,
    factorize_cube,
    factorize_quaternionic,
    gcd_real_polys,
    independent,
    right_factor,
    scalar_roots,
)

from conftest import rand_quat

I2 = np.eye(2)


@pytest.fixture
def example():
    """P = 1 + mu [[0,2],[-2,0]] - 2 mu^2 and its reversal mu^2 P(-1/mu)."""
    p = MatrixPolynomial([I2, [[0, 2], [-2, 0]], -2 * I2])
    return p, p.reversed()


def one_plus(*us):
    out = MatrixPolynomial([I2])
    for u in us:
        out = out * MatrixPolynomial.one_plus(u)
    return out


def test_det_poly_small_examples():
    p = MatrixPolynomial.linear(I2)
    assert np.allclose(det_poly(p), [1, -2, 1])
    assert np.allclose(det_poly(MatrixPolynomial([I2, [[0, 2], [-2, 0]], -2 * I2])), [1, 0, 0, 0, 4])


def test_scalar_roots():
    assert np.allclose(np.sort_complex(scalar_roots([1, 0, 1])), [-1j, 1j])
    r = scalar_roots([1, 0, 0, 0, 4])
    assert np.allclose(np.abs(r), np.sqrt(0.5))
    assert np.allclose(np.polyval([4, 0, 0, 0, 1], r), 0, atol=1e-12)
    # a triple root is ill conditioned: ~eps^(1/3)
    assert np.allclose(scalar_roots([-8, 12, -6, 1]), 2, atol=1e-4)
    with pytest.raises(ZeroPolynomial):
        scalar_roots([0, 0])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False), min_size=1, max_size=6))
def test_scalar_roots_reproduce_polynomial(zs):
    coeffs = np.poly(zs)[::-1]
    roots = scalar_roots(coeffs)
    assert len(roots) == len(zs)
    # residual test is well conditioned even when roots cluster
    scale = np.polyval(np.abs(coeffs[::-1]), np.abs(roots))
    assert np.all(np.abs(np.polyval(coeffs[::-1], roots)) <= 1e-9 * np.maximum(1, scale))


def test_gcd_real_polys():
    a = np.convolve([1, 0, 1], [-2, 1])  # (mu^2 + 1)(mu - 2)
    b = np.convolve([1, 0, 1], [3, 1])
    assert np.allclose(gcd_real_polys([a, b]), [1, 0, 1])
    assert np.allclose(gcd_real_polys([[1, 1], [2, 1]]), [1])
    assert np.allclose(gcd_real_polys([a, np.zeros(3)]), a / a[-1])
    with pytest.raises(AllZero):
        gcd_real_polys([[0, 0], [0]])


def test_independence(example):
    p, r = example
    assert independent(p, (-1 + 1j) / 2, (-1 - 1j) / 2)
    assert not independent(MatrixPolynomial.linear(I2), 1.0, 1.0)
    assert not independent(r, 1 + 1j, 1 + 1j)
    assert independent(r, 1 + 1j, -1 - 1j)
    assert independent(r, 1 + 1j, 1 - 1j)
    with pytest.raises(NotARoot):
        independent(r, 0.3, 1 + 1j)
    # scalar root: the kernel is everything
    s = MatrixPolynomial([-2 * I2, I2]) * MatrixPolynomial([-3 * I2, I2])
    assert not independent(s, 2.0, 3.0)
    with pytest.raises(NotIndependent):
        right_factor(s, 2.0, 3.0)


def test_right_factor_construct_then_recover(rng):
    u = quat_to_mat2(rand_quat(rng)).m + 0.3 * rng.normal(size=(2, 2))
    v = quat_to_mat2(rand_quat(rng)).m
    p = MatrixPolynomial.linear(v) * MatrixPolynomial.linear(u)
    mu1, mu2 = np.linalg.eigvals(u)
    rf = right_factor(p, mu1, mu2)
    assert np.allclose(rf.u.m, u, atol=1e-9)
    assert np.allclose(rf.quotient.coefficient(0).m, -v, atol=1e-9)
    assert rf.residual < 1e-12
    # any valid column choice gives the same factor
    for cols in [(0, 0), (0, 1), (1, 0), (1, 1)]:
        try:
            alt = right_factor(p, mu1, mu2, columns=cols)
        except DegenerateColumns:
            continue
        assert np.allclose(alt.u.m, u, atol=1e-8)


def test_example_quaternionic_factorization(example):
    p, r = example
    cube = factorize_cube(r, conjugate_pairing(r))
    a = Mat2([[1, 1], [-1, 1]])
    b = Mat2([[-1, 1], [-1, -1]])
    right, left = cube.net[0, (0, 0)], cube.net[1, (1, 0)]
    assert right.close(b, 1e-9) and left.close(a, 1e-9)
    assert one_plus(a, b).distance(p) < 1e-12
    assert cube.max_path_error(r) < 1e-12


def test_example_zero_folded_factorization(example):
    p, r = example
    rf = right_factor(r, 1 + 1j, -1 - 1j)
    b = Mat2([[0, 1 - 1j], [-1 + 1j, 0]])
    a = Mat2([[0, 1 + 1j], [-1 - 1j, 0]])
    assert rf.u.close(b, 1e-9)
    assert rf.quotient.distance(MatrixPolynomial.linear(a)) < 1e-9
    assert one_plus(a, b).distance(p) < 1e-12
    assert not b.is_quaternion()
    assert abs(b.trace()) < 1e-12  # zero-folded: both factors are traceless
    assert abs(a.trace()) < 1e-12


def test_quaternionic_spherical_case():
    p = MatrixPolynomial([I2, 0 * I2, I2])  # mu^2 + 1
    f = factorize_quaternionic(p)
    assert not f.factors
    assert len(f.real_factors) == 1 and np.allclose(f.real_factors[0], [1, 0, 1])
    assert f.residual < 1e-12


def test_quaternionic_random_product(rng):
    us = [rand_quat(rng) for _ in range(3)]
    p = MatrixPolynomial([I2])
    for u in reversed(us):
        p = p * MatrixPolynomial.linear(u)
    f = factorize_quaternionic(p)
    assert f.residual < 1e-10
    assert all(isinstance(u, Quaternion) for u in f.factors)
    assert f.product().distance(p) < 1e-9
    # the trace spectrum of the factors matches the det roots
    traces = sorted(u.trace() for u in f.factors)
    assert np.allclose(traces, sorted(u.trace() for u in us), atol=1e-8)


def test_quaternionic_rejects_complex(example):
    _, r = example
    with pytest.raises(ValidationError):
        factorize_quaternionic(MatrixPolynomial.linear(Mat2([[0, 1j], [0, 0]])))
    assert r.is_quaternionic()


def test_cube_degree_one():
    u = quat_to_mat2(Quaternion(0.5, 1, 0, 0))
    p = MatrixPolynomial.linear(u)
    cube = factorize_cube(p, conjugate_pairing(p))
    assert cube.n == 1
    assert cube.net[0, (0,)].close(u, 1e-9)


def test_cube_degree_four(rng):
    us = [rand_quat(rng) for _ in range(4)]
    p = MatrixPolynomial([I2])
    for u in us:
        p = p * MatrixPolynomial.linear(u)
    cube = factorize_cube(p, conjugate_pairing(p))
    assert len(list(cube.paths())) == 24
    assert cube.max_path_error(p) < 1e-9
    with pytest.raises(ValidationError):
        factorize_cube(p, conjugate_pairing(p)[:2])


def test_reversed_is_involution(example):
    p, r = example
    assert r.reversed().distance(p) == 0.0
    mu = 0.7 - 0.2j
    assert np.allclose(r(mu).m, mu**2 * p(-1 / mu).m)


def test_polynomial_json_round_trip(example):
    p, _ = example
    doc = json.loads(json.dumps(p.to_json()))
    assert MatrixPolynomial.from_json(doc).distance(p) == 0.0
    with pytest.raises(ValidationError):
        MatrixPolynomial.from_json({"coeffs": []})
    with pytest.raises(ValidationError):
        MatrixPolynomial.from_json({"coeffs": [[[1, 0], [0, 1]]], "x": 1})
